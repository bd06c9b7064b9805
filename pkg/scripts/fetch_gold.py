"""Fetch the published 350-record gold dataset and write it in the kbrank gold CSV layout.

The dataset is published at https://www.kaggle.com/srazniewski/wikidatapropertyranking.
Kaggle downloads need an account, so either

  * download the CSV from that page by hand and pass it with --source, or
  * have the ``kaggle`` command-line client configured (``~/.kaggle/kaggle.json``)
    and run without --source.

Column names in the published file are mapped onto kbrank's columns with
``--map kbrank_column=published_column``; run once without mappings to see the
columns the file actually has. The result goes to data/gold/gold.csv, which the
acceptance suite picks up (or point KBRANK_GOLD_DATASET at another path).
"""

from __future__ import annotations

import argparse
import csv
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

DATASET = "srazniewski/wikidatapropertyranking"
COLUMNS = ("record_id", "entity_label", "entity_description", "prop_a", "prop_b", "votes_a", "votes_b")
REQUIRED = COLUMNS[1:]


def download(target: Path) -> Path:
    if shutil.which("kaggle") is None:
        sys.exit("the kaggle client is not installed; download the CSV by hand and pass --source")
    subprocess.run(["kaggle", "datasets", "download", "-d", DATASET, "-p", str(target), "--unzip"], check=True)
    found = sorted(target.glob("**/*.csv"))
    if not found:
        sys.exit(f"no CSV file in the downloaded dataset under {target}")
    return found[0]


def normalize(source: Path, out: Path, mapping: dict[str, str]) -> int:
    with open(source, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        cols = {c: mapping.get(c, c) for c in COLUMNS}
        missing = [c for c in REQUIRED if cols[c] not in header]
        if missing:
            sys.exit(f"{source}: no column for {', '.join(missing)}; the file has: {', '.join(header)}\n"
                     f"map them with --map {missing[0]}=<column>")
        rows = list(reader)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        for i, row in enumerate(rows, 1):
            rid = row.get(cols["record_id"]) or f"g{i:03d}"
            writer.writerow([rid] + [row[cols[c]].strip() for c in REQUIRED])
    return len(rows)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--source", type=Path, help="CSV downloaded from the dataset page")
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "data" / "gold" / "gold.csv")
    parser.add_argument("--map", action="append", default=[], metavar="KBRANK=PUBLISHED",
                        help="column mapping, repeatable")
    args = parser.parse_args(argv)
    mapping = dict(m.split("=", 1) for m in args.map)
    unknown = set(mapping) - set(COLUMNS)
    if unknown:
        parser.error(f"unknown kbrank columns: {', '.join(sorted(unknown))}")
    with tempfile.TemporaryDirectory() as tmp:
        source = args.source or download(Path(tmp))
        n = normalize(source, args.out, mapping)
    print(f"wrote {n} records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
