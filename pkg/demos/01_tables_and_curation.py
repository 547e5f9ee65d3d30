# Ingesting messy CSV data: trimming, null unification, row capping,
# and column type inference.

from pipebench import CurationOptions, ingest_csv_text

RAW = """\
name,score,year,notes
 Ada ,9.5,1815,likes punched cards
Grace,NA,1906,
 Null ,7.25,1815,duplicate year
Alan,8,1912,N/A
"""

table = ingest_csv_text(RAW, "people")
print("schema:", table.schema())
print("rows:")
for row in table.rows:
    print("  ", row)

# " Ada " was trimmed, "NA"/"N/A"/"Null" and empty fields became nulls,
# and `score` widened to real because of the 9.5/7.25 cells.
assert table.column_names == ["name", "score", "year", "notes"]
assert table.rows[1][1] is None

# Curation is optional; the raw view keeps every byte except that empty
# CSV fields still mean "missing".
raw_view = ingest_csv_text(RAW, "people_raw", CurationOptions(enabled=False))
print("\nuncurated first cell:", repr(raw_view.rows[0][0]))

# Tables beyond the row cap are truncated with their schema intact.
big = "n\n" + "\n".join(str(i) for i in range(500))
capped = ingest_csv_text(big, "big", CurationOptions(row_cap=50))
print("capped rows:", capped.num_rows)

# Round trip: CSV out, CSV in, same table.
again = ingest_csv_text(table.to_csv(), "people", CurationOptions(enabled=False))
assert again == table
print("\nround trip OK")
