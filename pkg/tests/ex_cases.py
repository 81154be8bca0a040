"""Execution-accuracy perturbation cases.

Rows were worked out by hand from the INSERT statements in the bundled .sql
files; the verdict follows from the comparison rules, not from running code.
"""

EX_CASES = [
    # (db, predicted, gold, predicted rows, gold rows, verdict)
    ("concert_singer", "SELECT name FROM singer ORDER BY name DESC", "SELECT name FROM singer",
     [("Timbaland",), ("Rose White",), ("Joe Sharp",)],
     [("Joe Sharp",), ("Timbaland",), ("Rose White",)], True),
    ("concert_singer", "SELECT name FROM singer ORDER BY age", "SELECT name FROM singer ORDER BY age DESC",
     [("Timbaland",), ("Rose White",), ("Joe Sharp",)],
     [("Joe Sharp",), ("Rose White",), ("Timbaland",)], False),
    ("concert_singer", "SELECT name FROM singer ORDER BY net_worth DESC", "SELECT name FROM singer ORDER BY singer_id",
     [("Joe Sharp",), ("Timbaland",), ("Rose White",)],
     [("Joe Sharp",), ("Timbaland",), ("Rose White",)], True),
    ("concert_singer", "SELECT sum(age) * 1.0 FROM singer", "SELECT sum(age) FROM singer",
     [(125.0,)], [(125,)], True),
    ("concert_singer", "SELECT sum(age) / count(*) FROM singer", "SELECT avg(age) FROM singer",
     [(41,)], [(125 / 3,)], False),
    ("school", "SELECT sum(grade) / count(*) FROM enrollment", "SELECT avg(grade) FROM enrollment",
     [(37.2 / 11,)], [(37.2 / 11,)], True),
    ("concert_singer", "SELECT net_worth FROM singer", "SELECT net_worth FROM singer WHERE net_worth IS NOT NULL",
     [(30.0,), (11.5,), (None,)], [(30.0,), (11.5,)], False),
    ("concert_singer", "SELECT net_worth FROM singer WHERE singer_id = 3",
     "SELECT net_worth FROM singer WHERE name = 'Rose White'",
     [(None,)], [(None,)], True),
    ("concert_singer", "SELECT coalesce(net_worth, 0) FROM singer WHERE singer_id = 3",
     "SELECT net_worth FROM singer WHERE singer_id = 3",
     [(0,)], [(None,)], False),
    ("concert_singer", "SELECT count(*) AS n FROM singer", "SELECT count(singer_id) FROM singer",
     [(3,)], [(3,)], True),
    ("concert_singer", "SELECT name, age FROM singer", "SELECT name FROM singer",
     [("Joe Sharp", 52), ("Timbaland", 32), ("Rose White", 41)],
     [("Joe Sharp",), ("Timbaland",), ("Rose White",)], False),
    ("concert_singer", "SELECT DISTINCT venue FROM concert", "SELECT venue FROM concert",
     [("Stark Arena",), ("Somerset Hall",), ("Glebe Park",), ("Balmoor",)],
     [("Stark Arena",), ("Somerset Hall",), ("Stark Arena",), ("Glebe Park",), ("Balmoor",)], False),
]


