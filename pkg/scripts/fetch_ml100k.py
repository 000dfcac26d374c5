"""Fetch MovieLens-100k and write it as a MovieLens ``::`` ratings file.

GroupLens downloads are often unreachable from build machines, while PyPI
is. The ``recbole`` wheel on PyPI ships the ML-100k ratings as a tab
separated ``.inter`` file; this script downloads that wheel (no install,
no dependencies) and converts it.

    python scripts/fetch_ml100k.py [--out data/ml-100k/ratings.dat]
"""

import argparse
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

WHEEL = "recbole==1.2.1"
MEMBER = "recbole/dataset_example/ml-100k/ml-100k.inter"


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="data/ml-100k/ratings.dat")
    args = parser.parse_args(argv)
    out = Path(args.out)
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", tmp,
                        WHEEL], check=True)
        wheel = next(Path(tmp).glob("recbole-*.whl"))
        with zipfile.ZipFile(wheel) as zf:
            text = zf.read(MEMBER).decode("utf-8")
    rows = text.splitlines()[1:]
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for row in rows:
            user, item, rating, stamp = row.split("\t")
            fh.write(f"{user}::{item}::{int(float(rating))}::{int(float(stamp))}\n")
    print(f"wrote {len(rows)} ratings to {out}")


if __name__ == "__main__":
    main()
