"""Hand-labelled Exact Set Match pairs (value mode IGNORE unless noted)."""

# (db_id, sql_a, sql_b, expected)
EM_PAIRS = [
    ("concert_singer", "SELECT name FROM singer WHERE age > 20", "select NAME from singer where age > 30", True),
    ("concert_singer", "SELECT T1.name FROM singer AS T1", "SELECT name FROM singer", True),
    ("concert_singer",
     "SELECT name, age FROM singer WHERE country = 'France' AND age > 20",
     "SELECT age, name FROM singer WHERE age > 20 AND country = 'France'", True),
    ("concert_singer", "SELECT name FROM singer", "SELECT DISTINCT name FROM singer", False),
    ("concert_singer", "SELECT count(*) FROM singer", "SELECT count(singer_id) FROM singer", False),
    ("concert_singer",
     "SELECT T2.concert_name FROM singer_in_concert AS T1 JOIN concert AS T2 ON T1.concert_id = T2.concert_id",
     "SELECT c.concert_name FROM singer_in_concert sic JOIN concert c ON c.concert_id = sic.concert_id", True),
    ("concert_singer",
     "SELECT concert.concert_name FROM concert, singer_in_concert WHERE concert.concert_id = singer_in_concert.concert_id",
     "SELECT T2.concert_name FROM singer_in_concert AS T1 JOIN concert AS T2 ON T1.concert_id = T2.concert_id", True),
    ("concert_singer", "SELECT name FROM singer ORDER BY age", "SELECT name FROM singer ORDER BY age ASC", True),
    ("concert_singer", "SELECT name FROM singer ORDER BY age DESC", "SELECT name FROM singer ORDER BY age", False),
    ("concert_singer", "SELECT name FROM singer ORDER BY age, name", "SELECT name FROM singer ORDER BY name, age", False),
    ("concert_singer",
     "SELECT name FROM singer WHERE age > 20 AND country = 'France'",
     "SELECT name FROM singer WHERE age > 20 OR country = 'France'", False),
    ("concert_singer", "SELECT name FROM singer WHERE 20 < age", "SELECT name FROM singer WHERE age > 20", True),
    ("concert_singer",
     "SELECT country, count(*) FROM singer GROUP BY country HAVING count(*) > 1",
     "SELECT count(*), country FROM singer GROUP BY country HAVING count(*) > 2", True),
    ("concert_singer",
     "SELECT country FROM singer GROUP BY country",
     "SELECT country FROM singer GROUP BY country HAVING count(*) > 1", False),
    ("concert_singer",
     "SELECT name FROM singer WHERE age > 30 UNION SELECT name FROM singer WHERE country = 'France'",
     "SELECT name FROM singer WHERE age > 30 INTERSECT SELECT name FROM singer WHERE country = 'France'", False),
    ("concert_singer",
     "SELECT name FROM singer WHERE singer_id IN (SELECT singer_id FROM singer_in_concert)",
     "SELECT T1.name FROM singer AS T1 WHERE T1.singer_id IN (SELECT T2.singer_id FROM singer_in_concert AS T2)", True),
    ("concert_singer",
     "SELECT name FROM singer WHERE singer_id IN (SELECT singer_id FROM singer_in_concert)",
     "SELECT name FROM singer WHERE singer_id NOT IN (SELECT singer_id FROM singer_in_concert)", False),
    ("school", "SELECT fname FROM student ORDER BY age DESC LIMIT 1", "SELECT fname FROM student ORDER BY age DESC", False),
    ("school",
     "SELECT s.fname FROM student s JOIN enrollment e ON s.stu_id = e.stu_id WHERE e.grade > 3",
     "SELECT student.fname FROM student JOIN enrollment ON enrollment.stu_id = student.stu_id WHERE enrollment.grade > 2",
     True),
    ("store", "SELECT name FROM customer WHERE city <> 'Seattle'", "SELECT name FROM customer WHERE city != 'Boston'", True),
]
