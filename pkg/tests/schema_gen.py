"""Random DatabaseSchema generator shared by unit and acceptance tests."""

import random

from sqlrefine.schema import ColumnDef, DatabaseSchema, DataType, ForeignKey, TableDef

# plain words, SQL keywords and names that need quoting
NAME_POOL = [
    "id", "name", "age", "city", "price", "order", "group", "select", "Year", "Title",
    "first name", "rank", "value", "key", "index", "total_2", "x", "col-a", "Desc", "when",
]
TABLE_POOL = ["users", "Orders", "item", "table", "group", "line items", "Stock", "where", "t1", "acct"]


def random_schema(rng: random.Random, db_id: str = "rand") -> DatabaseSchema:
    n_tables = rng.randint(1, 5)
    table_names = rng.sample(TABLE_POOL, n_tables)
    tables = []
    for tname in table_names:
        col_names = rng.sample(NAME_POOL, rng.randint(1, 6))
        pk_size = rng.choice([0, 1, 1, 2]) if len(col_names) >= 2 else rng.choice([0, 1])
        pk = tuple(col_names[:pk_size])
        cols = tuple(
            ColumnDef(c, rng.choice(list(DataType)), rng.random() < 0.3, c in pk) for c in col_names
        )
        fks = []
        for target in tables:
            if target.primary_key and rng.random() < 0.5:
                arity = len(target.primary_key)
                local = [c.name for c in cols if c.name not in pk]
                if len(local) >= arity:
                    fks.append(ForeignKey(tuple(rng.sample(local, arity)), target.name, target.primary_key))
        tables.append(TableDef(tname, cols, pk, tuple(fks)))
    return DatabaseSchema(db_id, tuple(tables))
