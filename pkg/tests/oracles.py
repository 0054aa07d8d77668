"""Independent reference implementations used only by the tests."""

from itertools import permutations, product

from qualqa.lf import Direction, QRel, QuestionLF, QVal, TemplateError, World
from qualqa.theory import PathSign, Sign, ValueLevel


def enumerate_path_signs(t, src, dst, undirected=False):
    """Try every ordering of every subset of intermediate nodes."""
    if src == dst:
        return PathSign.PLUS
    edges = {}
    for inf in t.influences:
        edges[(inf.src, inf.dst)] = inf.sign
        if undirected:
            edges.setdefault((inf.dst, inf.src), inf.sign)
    middle = [p for p in t.properties if p not in (src, dst)]
    signs = set()
    for k in range(len(middle) + 1):
        for perm in permutations(middle, k):
            nodes = (src, *perm, dst)
            sign = Sign.PLUS
            for a, b in zip(nodes, nodes[1:]):
                if (a, b) not in edges:
                    break
                sign = Sign.PLUS if sign is edges[(a, b)] else Sign.MINUS
            else:
                signs.add(sign)
    if len(signs) == 2:
        return PathSign.AMBIGUOUS
    if not signs:
        return PathSign.NO_PATH
    return PathSign.PLUS if signs.pop() is Sign.PLUS else PathSign.MINUS


def naive_closure(seed, t, bidirectional=True):
    """Ground rules R1-R3 (plus reversed R2/R3) applied until nothing changes."""
    facts = set(seed)
    rules = []
    for inf in t.influences:
        rules.append((inf.src, inf.dst, inf.sign))
        if bidirectional:
            rules.append((inf.dst, inf.src, inf.sign))
    changed = True
    while changed:
        changed = False
        new = set()
        for f in facts:
            new.add(QRel(f.property, f.direction.opposite, f.world.opposite))
            for a, b, sign in rules:
                if f.property == a:
                    d = f.direction if sign is Sign.PLUS else f.direction.opposite
                    new.add(QRel(b, d, f.world))
        if not new <= facts:
            facts |= new
            changed = True
    bad = {f.property for f in facts if QRel(f.property, f.direction.opposite, f.world) in facts}
    return {f for f in facts if f.property not in bad}, bad


def brute_force_lfs(props, template):
    """Filter every (setup, a, b) combination through the LF constructor."""
    props = sorted(props)
    qrels = [QRel(p, d, w) for p in props for d in Direction for w in World]
    qvals = [QVal(p, v, w) for p in props for v in ValueLevel for w in World]
    setups = []
    if template in ("one", "both"):
        setups += [(a,) for a in qrels]
    if template in ("two", "both"):
        setups += [(a, b) for a, b in product(qvals, repeat=2)]
    out = set()
    for setup, a, b in product(setups, qrels, qrels):
        try:
            out.add(QuestionLF(setup, a, b))
        except TemplateError:
            pass
    return out
