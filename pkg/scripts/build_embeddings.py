"""Build the shipped embedding file.

With --glove, vectors are copied from a GloVe text file for the chosen
vocabulary. Without it (the default, and what the checked-in file was built
with) each word gets a deterministic vector: the sum of seeded Gaussian
vectors for its boundary-marked character 3- to 5-grams plus one for the
whole word. Morphological neighbours (fast/faster, smooth/smoother) end up
close; synonyms do not.

    python3 scripts/build_embeddings.py [--glove glove.6B.50d.txt] [--size 4900]
"""

from __future__ import annotations

import argparse
import hashlib
import re
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
RES = ROOT / "src" / "qualqa" / "resources"
WORD = re.compile(r"^[a-z][a-z']*$")


def ngrams(word: str, lo: int = 3, hi: int = 5) -> list[str]:
    w = f"<{word}>"
    grams = [w]
    for n in range(lo, hi + 1):
        grams.extend(w[i : i + n] for i in range(len(w) - n + 1))
    return grams


def gram_vector(gram: str, dim: int) -> np.ndarray:
    seed = int.from_bytes(hashlib.blake2b(gram.encode(), digest_size=8).digest(), "little")
    return np.random.default_rng(seed).standard_normal(dim)


def hashed_vector(word: str, dim: int) -> np.ndarray:
    grams = ngrams(word)
    v = sum(gram_vector(g, dim) for g in grams)
    v = v + 2.0 * gram_vector(grams[0], dim)  # whole word weighs more than its pieces
    return v / np.linalg.norm(v)


def resource_words() -> set[str]:
    out: set[str] = set()
    for name in ("lexicon.txt", "cues.txt", "friction.grammar", "quarel.theory", "friction.theory"):
        text = (RES / name).read_text().lower()
        out.update(re.findall(r"[a-z][a-z']+", text))
    return out


def vocabulary(size: int) -> list[str]:
    from wordfreq import top_n_list

    words = [w for w in top_n_list("en", size * 2) if WORD.match(w)][:size]
    seen = set(words)
    words += sorted(w for w in resource_words() if w not in seen)
    return words


def read_glove(path: Path, keep: set[str]) -> dict[str, np.ndarray]:
    out = {}
    with path.open(encoding="utf8") as fh:
        for line in fh:
            w, *rest = line.rstrip().split(" ")
            if w in keep:
                out[w] = np.asarray(rest, dtype=float)
    return out


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--glove", type=Path)
    ap.add_argument("--size", type=int, default=4900)
    ap.add_argument("--dim", type=int, default=50)
    ap.add_argument("--out", type=Path, default=RES / "embeddings.txt")
    args = ap.parse_args(argv)

    vocab = vocabulary(args.size)
    if args.glove:
        table = read_glove(args.glove, set(vocab))
        missing = len(vocab) - len(table)
        print(f"{missing} words not in {args.glove}, skipped", file=sys.stderr)
    else:
        table = {w: hashed_vector(w, args.dim) for w in vocab}
    with args.out.open("w") as fh:
        for w in vocab:
            if w in table:
                fh.write(w + " " + " ".join(f"{x:.6f}" for x in table[w]) + "\n")
    print(f"wrote {len(table)} vectors to {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
