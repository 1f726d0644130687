#!/usr/bin/env python3
"""Rebuild the 14-field numeric Cleveland table from Orange's heart_disease.tab.

Orange stores the categorical columns as text labels and keeps only the
binarized diagnosis (0 = no narrowing, 1 = narrowing > 50%). This script maps
the labels back to the original numeric codes and writes one comma-separated
row per patient, "?" for missing cells, no header.

    python3 tools/convert_orange_heart.py heart_disease.tab data/heart_cleveland_binary.csv
"""
import sys

CODES = {
    1: {"female": "0", "male": "1"},
    2: {"typical ang": "1", "atypical ang": "2", "non-anginal": "3", "asymptomatic": "4"},
    6: {"normal": "0", "ST-T abnormal": "1", "left vent hypertrophy": "2"},
    10: {"upsloping": "1", "flat": "2", "downsloping": "3"},
    12: {"normal": "3", "fixed defect": "6", "reversable defect": "7"},
}


def convert(src, dst):
    with open(src, encoding="utf-8") as f:
        lines = f.read().splitlines()[3:]
    out = []
    for line in lines:
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) != 14:
            raise SystemExit(f"unexpected field count {len(cells)}: {line!r}")
        row = []
        for i, cell in enumerate(cells):
            cell = cell.strip()
            if cell in ("", "?"):
                row.append("?")
            elif i in CODES:
                row.append(CODES[i][cell])
            else:
                row.append(cell)
        out.append(",".join(row))
    with open(dst, "w", encoding="utf-8") as f:
        f.write("\n".join(out) + "\n")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        raise SystemExit(__doc__)
    convert(sys.argv[1], sys.argv[2])
