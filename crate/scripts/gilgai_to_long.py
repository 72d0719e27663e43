#!/usr/bin/env python3
"""Reshape the gilgai soil survey table to long (ph, depth) format.

The input is the wide layout distributed with R's DAAG/MASS packages
(`gilgais`): one row per site, with pH at three depths in columns pH00,
pH30 and pH80. The output has one row per (site, depth):

    ph,depth
    7.0,0-10
    9.4,30-40
    ...

Usage: gilgai_to_long.py gilgais.csv gilgai_long.csv
"""

import csv
import sys

DEPTHS = [("pH00", "0-10"), ("pH30", "30-40"), ("pH80", "80-90")]


def main(argv):
    if len(argv) != 3:
        sys.exit(__doc__.split("Usage: ")[1])
    src, dst = argv[1], argv[2]
    with open(src, newline="") as f:
        reader = csv.DictReader(f)
        missing = [c for c, _ in DEPTHS if c not in (reader.fieldnames or [])]
        if missing:
            sys.exit(f"{src}: missing column(s) {', '.join(missing)}")
        rows = list(reader)
    # Depth-major order: all 0-10 cm readings first, then 30-40, then 80-90.
    with open(dst, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["ph", "depth"])
        for col, label in DEPTHS:
            for line, row in enumerate(rows, start=2):
                value = row[col].strip()
                if not value:
                    sys.exit(f"{src}:{line}: blank {col}")
                writer.writerow([value, label])
    print(f"wrote {len(rows) * len(DEPTHS)} rows to {dst}", file=sys.stderr)


if __name__ == "__main__":
    main(sys.argv)
