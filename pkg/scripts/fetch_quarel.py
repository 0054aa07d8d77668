"""Download the question release into data/quarel/{train,dev,test}.jsonl.

    python3 scripts/fetch_quarel.py [--out data/quarel] [--url URL]

Tries the release zip first. Any zip or directory holding
quarel-v1-{split}.jsonl files works with --url or --from-zip.
"""

from __future__ import annotations

import argparse
import io
import sys
import urllib.request
import zipfile
from pathlib import Path

URLS = (
    "https://s3-us-west-2.amazonaws.com/ai2-website/data/quarel-dataset-v1-nov2018.zip",
    "http://data.allenai.org/quarel/quarel-dataset-v1-nov2018.zip",
)
SPLITS = ("train", "dev", "test")


def extract(blob: bytes, out: Path) -> list[Path]:
    written = []
    with zipfile.ZipFile(io.BytesIO(blob)) as zf:
        names = zf.namelist()
        for split in SPLITS:
            hits = [n for n in names if n.endswith(f"quarel-v1-{split}.jsonl")]
            if not hits:
                raise SystemExit(f"no {split} file in archive")
            dest = out / f"{split}.jsonl"
            dest.write_bytes(zf.read(hits[0]))
            written.append(dest)
    return written


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("data/quarel"))
    ap.add_argument("--url", action="append")
    ap.add_argument("--from-zip", type=Path)
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    if args.from_zip:
        blob = args.from_zip.read_bytes()
    else:
        blob = None
        for url in args.url or URLS:
            try:
                with urllib.request.urlopen(url, timeout=30) as r:
                    blob = r.read()
                break
            except OSError as e:
                print(f"{url}: {e}", file=sys.stderr)
        if blob is None:
            print("could not download the dataset", file=sys.stderr)
            return 2
    for p in extract(blob, args.out):
        n = sum(1 for line in p.open() if line.strip())
        print(f"{p}\t{n}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
