#!/usr/bin/env python
"""One-time conversion of the benchmark datasets into the shipped CSV dialect.

Raw files are read straight out of two PyPI wheels that bundle copies of the
KEEL / UCI repositories:

    pip download keel-ds==0.2.5 imbalanced-databases==0.1.1 --no-deps -d wheels/
    python scripts/convert_datasets.py wheels/ src/gbrff/datasets/

Every output file is comma separated with a header row; the last column is
named ``class`` and holds the raw class value. Binarization is *not* done
here, it is driven by the ``<name>.json`` spec written next to each CSV.

Per-dataset quirks handled here:

* balance: the UCI balance-scale data is the full 5**4 enumeration of
  (left weight, left distance, right weight, right distance); it is generated
  rather than read.
* splice: rows containing ambiguous nucleotide codes (D, N, S, R) are dropped,
  bases are coded A=1, C=2, G=3, T=4 and the raw class becomes "+1" for a
  boundary (EI or IE) and "-1" for neither.
* german: the Strathclyde numeric version (24 attributes, class 1/2).
* glass: UCI file without the row identifier column.
* newthyroid: the KEEL copy only separates one abnormal class (35 rows) from
  the rest; raw classes are written as "1" (rest) and "2" (abnormal).
* pima: tested_negative/tested_positive become 0/1.
"""
import argparse
import csv
import glob
import itertools
import json
import os
import zipfile

KEEL_WHEEL = "keel_ds-*.whl"
IMBDB_WHEEL = "imbalanced_databases-*.whl"

# name -> (negative raw classes, positive raw classes), as in the benchmark table
CLASS_SETS = {
    "wine": (["2", "3"], ["1"]),
    "sonar": (["M"], ["R"]),
    "glass": (["2", "3", "5", "6", "7"], ["1"]),
    "newthyroid": (["1"], ["2"]),
    "heart": (["1"], ["2"]),
    "bupa": (["2"], ["1"]),
    "iono": (["g"], ["b"]),
    "wdbc": (["B"], ["M"]),
    "balance": (["B", "R"], ["L"]),
    "australian": (["0"], ["1"]),
    "pima": (["0"], ["1"]),
    "german": (["1"], ["2"]),
    "splice": (["+1"], ["-1"]),
    "spambase": (["0"], ["1"]),
}


def _wheel(src, pattern):
    hits = sorted(glob.glob(os.path.join(src, pattern)))
    if not hits:
        raise SystemExit(f"no wheel matching {pattern} in {src}")
    return zipfile.ZipFile(hits[-1])


def _keel_rows(zf, member):
    text = zf.read(member).decode("utf-8")
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        rows.append([tok.strip() for tok in line.split(",")])
    return rows


def _keel(zf, name, group="balanced"):
    return _keel_rows(zf, f"keel_ds/data/{group}/raw/{name}.dat")


def _write(out_dir, name, rows):
    d = len(rows[0]) - 1
    header = [f"x{j + 1}" for j in range(d)] + ["class"]
    path = os.path.join(out_dir, f"{name}.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    neg, pos = CLASS_SETS[name]
    spec = {
        "name": name,
        "source_path": f"{name}.csv",
        "label_column": "class",
        "negative_classes": neg,
        "positive_classes": pos,
    }
    with open(os.path.join(out_dir, f"{name}.json"), "w", encoding="utf-8") as fh:
        json.dump(spec, fh, indent=2)
        fh.write("\n")
    print(f"{name:12s} n={len(rows):5d} d={d}")


def balance_rows():
    rows = []
    for lw, ld, rw, rd in itertools.product(range(1, 6), repeat=4):
        left, right = lw * ld, rw * rd
        cls = "L" if left > right else ("R" if right > left else "B")
        rows.append([str(lw), str(ld), str(rw), str(rd), cls])
    return rows


def splice_rows(keel):
    code = {"A": "1", "C": "2", "G": "3", "T": "4"}
    rows = []
    for r in _keel(keel, "splice"):
        bases, cls = r[:-1], r[-1]
        if any(b not in code for b in bases):
            continue
        rows.append([code[b] for b in bases] + ["-1" if cls == "N" else "+1"])
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("wheel_dir")
    parser.add_argument("out_dir")
    args = parser.parse_args(argv)
    keel = _wheel(args.wheel_dir, KEEL_WHEEL)
    imbdb = _wheel(args.wheel_dir, IMBDB_WHEEL)
    os.makedirs(args.out_dir, exist_ok=True)

    for name, keel_name in [("wine", "wine"), ("sonar", "sonar"), ("heart", "heart"),
                            ("bupa", "bupa"), ("iono", "ionosphere"), ("wdbc", "wdbc"),
                            ("australian", "australian"), ("spambase", "spambase")]:
        _write(args.out_dir, name, _keel(keel, keel_name))

    pima = [r[:-1] + ["1" if r[-1] == "tested_positive" else "0"] for r in _keel(keel, "pima")]
    _write(args.out_dir, "pima", pima)

    thyroid = [r[:-1] + ["2" if r[-1] == "positive" else "1"]
               for r in _keel(keel, "new-thyroid1", group="imbalanced")]
    _write(args.out_dir, "newthyroid", thyroid)

    glass_txt = imbdb.read("imbalanced_databases/data/glass/glass.data.txt").decode()
    glass = [line.split(",")[1:] for line in glass_txt.split() if line]
    _write(args.out_dir, "glass", glass)

    german_txt = imbdb.read("imbalanced_databases/data/german/german.data-numeric.txt").decode()
    german = [line.split() for line in german_txt.splitlines() if line.strip()]
    _write(args.out_dir, "german", german)

    _write(args.out_dir, "balance", balance_rows())
    _write(args.out_dir, "splice", splice_rows(keel))


if __name__ == "__main__":
    main()
