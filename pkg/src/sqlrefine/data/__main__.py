from . import build_databases

print(build_databases())
