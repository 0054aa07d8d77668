"""A small CCG-like parser from delexicalized questions to logical forms.

Grammar files hold one lexical rule per line::

    "is greater than" :: (S\\PROPERTY)\\WORLD :: qrel($p, higher, $w)
    "velocity" :: PROPERTY :: speed

Categories only look left.  Slots are named by the type they receive
($w WORLD, $p PROPERTY, $v or $d VALUE, $f a function category) and are
numbered in the order arguments are consumed, nearest-left first: a second
WORLD argument binds $w2.  A VALUE bound into a qrel direction reads high as
higher and low as lower.  Inside a phrase, any run of underscores matches a
blank of any length.

WORLD1 and WORLD2 are built in with category WORLD.  A rule of category
WORLD\\WORLD marks the world it consumes as the focus of the question, which
answer options without a world of their own refer to.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable

from .lf import Direction, QRel, QuestionLF, QVal, TemplateError, World
from .text import WORLD_TOKENS, norm, segment, sentences, words
from .theory import Theory, ValueLevel

ATOMS = ("S", "WORLD", "PROPERTY", "VALUE")
BEAM = 48
ATTACH_WINDOW = 6


class GrammarError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


@dataclass(frozen=True)
class Category:
    atom: str | None = None
    result: "Category | None" = None
    arg: "Category | None" = None

    @property
    def is_function(self) -> bool:
        return self.atom is None

    def args(self) -> list["Category"]:
        """Arguments in consumption order (outermost first)."""
        out, c = [], self
        while c.is_function:
            out.append(c.arg)
            c = c.result
        return out

    def target(self) -> "Category":
        c = self
        while c.is_function:
            c = c.result
        return c

    def __str__(self) -> str:
        if not self.is_function:
            return self.atom
        arg = str(self.arg) if not self.arg.is_function else f"({self.arg})"
        res = str(self.result) if not self.result.is_function else f"({self.result})"
        return f"{res}\\{arg}"


S, WORLD, PROPERTY, VALUE = (Category(a) for a in ATOMS)
S_WORLD = Category(None, S, WORLD)


def parse_category(text: str) -> Category:
    toks = re.findall(r"[A-Za-z]+|[()\\]|\S", text)
    pos = 0

    def primary() -> Category:
        nonlocal pos
        if pos >= len(toks):
            raise GrammarError(f"incomplete category {text!r}")
        tok = toks[pos]
        pos += 1
        if tok == "(":
            c = expr()
            if pos >= len(toks) or toks[pos] != ")":
                raise GrammarError(f"unbalanced parentheses in {text!r}")
            pos += 1
            return c
        if tok not in ATOMS:
            raise GrammarError(f"unknown category {tok!r} in {text!r}")
        return Category(tok)

    def expr() -> Category:
        nonlocal pos
        c = primary()
        while pos < len(toks) and toks[pos] == "\\":
            pos += 1
            c = Category(None, c, primary())
        return c

    c = expr()
    if pos != len(toks):
        raise GrammarError(f"trailing text in category {text!r}")
    return c


def _slot_kind(c: Category) -> str:
    if c.is_function:
        return "f"
    return {"WORLD": "w", "PROPERTY": "p", "VALUE": "v"}.get(c.atom, "s")


def slot_names(c: Category) -> list[str]:
    counts: dict[str, int] = {}
    out = []
    for a in c.args():
        k = _slot_kind(a)
        counts[k] = counts.get(k, 0) + 1
        out.append(f"${k}" if counts[k] == 1 else f"${k}{counts[k]}")
    return out


# semantics templates: ("const", x) | ("slot", name) | ("call", head, args)
_SEM_RE = re.compile(r"\s*(\$[a-z][0-9]*|[A-Za-z_][A-Za-z0-9_]*|[(),])")


def parse_semantics(text: str) -> tuple:
    toks, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _SEM_RE.match(text, pos)
        if not m:
            raise GrammarError(f"bad semantics {text!r}")
        toks.append(m.group(1))
        pos = m.end()
    i = 0

    def term():
        nonlocal i
        if i >= len(toks):
            raise GrammarError(f"incomplete semantics {text!r}")
        tok = toks[i]
        i += 1
        if tok in "(),":
            raise GrammarError(f"unexpected {tok!r} in semantics {text!r}")
        node = ("slot", re.sub(r"^\$d", "$v", tok)) if tok.startswith("$") else ("const", tok)
        if i < len(toks) and toks[i] == "(":
            i += 1
            args = [term()]
            while i < len(toks) and toks[i] == ",":
                i += 1
                args.append(term())
            if i >= len(toks) or toks[i] != ")":
                raise GrammarError(f"unbalanced parentheses in semantics {text!r}")
            i += 1
            head = node[1]
            if node[0] == "const" and (head not in ("qrel", "qval") or len(args) != 3):
                raise GrammarError(f"{head} is not qrel/3 or qval/3 in {text!r}")
            if node[0] == "slot" and len(args) != 1:
                raise GrammarError(f"function slot {head} takes one argument in {text!r}")
            return ("call", node, tuple(args))
        return node

    node = term()
    if i != len(toks):
        raise GrammarError(f"trailing text in semantics {text!r}")
    return node


def _slots_in(node) -> list[str]:
    if node[0] == "slot":
        return [node[1]]
    if node[0] == "call":
        return _slots_in(node[1]) + [s for a in node[2] for s in _slots_in(a)]
    return []


@dataclass(frozen=True)
class LexRule:
    phrase: tuple[str, ...]
    category: Category
    semantics: str
    template: tuple = field(compare=False, repr=False, default=())

    @property
    def slots(self) -> list[str]:
        return slot_names(self.category)


def make_rule(phrase: str, category: str, semantics: str) -> LexRule:
    toks = tuple(norm(w) for w in words(phrase))
    if not toks:
        raise GrammarError("empty phrase")
    cat = parse_category(category)
    tmpl = parse_semantics(semantics)
    want, got = slot_names(cat), _slots_in(tmpl)
    if sorted(set(got)) != sorted(want) or len(set(got)) != len(got):
        raise GrammarError(
            f"semantics {semantics!r} uses slots {sorted(set(got))} but category {cat} supplies {want}"
        )
    if cat.target() != S and tmpl[0] == "call":
        raise GrammarError(f"category {cat} does not build an S but semantics is {semantics!r}")
    return LexRule(toks, cat, semantics, tmpl)


@dataclass(frozen=True)
class Grammar:
    rules: tuple[LexRule, ...] = ()
    index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        seen = set()
        index: dict[str, list[LexRule]] = {}
        for r in self.rules:
            key = (r.phrase, r.category)
            if key in seen:
                raise GrammarError(f"duplicate rule {' '.join(r.phrase)!r} :: {r.category}")
            seen.add(key)
            index.setdefault(r.phrase[0], []).append(r)
        object.__setattr__(self, "index", index)

    def __len__(self) -> int:
        return len(self.rules)

    def lookup(self, toks: list[str], i: int, hi: int | None = None) -> tuple[int, list[LexRule]]:
        """Rules for the longest phrase starting at ``toks[i]``."""
        hi = len(toks) if hi is None else hi
        best, found = 0, []
        for r in self.index.get(toks[i], ()):
            n = len(r.phrase)
            if i + n <= hi and tuple(toks[i : i + n]) == r.phrase:
                if n > best:
                    best, found = n, [r]
                elif n == best:
                    found.append(r)
        return best, found


_LINE_RE = re.compile(r'^"([^"]+)"\s*::\s*(.+?)\s*::\s*(.+?)\s*$')


def load_grammar(source: str) -> Grammar:
    rules = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        # a trailing comment starts after the quoted phrase
        close = line.find('"', 1) if line.startswith('"') else 0
        hash_at = line.find("#", max(close, 0))
        if hash_at >= 0:
            line = line[:hash_at].rstrip()
        m = _LINE_RE.match(line)
        if not m:
            raise GrammarError(f"cannot parse rule {line!r}", lineno)
        try:
            rules.append(make_rule(*m.groups()))
        except GrammarError as e:
            raise GrammarError(str(e), lineno) from None
    try:
        return Grammar(tuple(rules))
    except GrammarError as e:
        raise GrammarError(str(e)) from None


def read_grammar(path) -> Grammar:
    with open(path, encoding="utf-8") as fh:
        return load_grammar(fh.read())


# ---------------------------------------------------------------- derivation


@dataclass(frozen=True)
class Item:
    cat: Category
    sem: object
    start: int
    end: int
    rule: LexRule | None = None
    bound: tuple = ()
    focus: bool = False
    used: int = 1

    @property
    def width(self) -> int:
        """Tokens actually consumed, not counting skipped ones in between."""
        return self.used

    def __str__(self) -> str:
        if self.cat.is_function:
            got = ", ".join(f"{k}={_show(v)}" for k, v in self.bound)
            return f"{self.cat}[{self.rule.semantics}{'; ' + got if got else ''}]@{self.start}"
        return f"{self.cat}:{_show(self.sem)}@{self.start}"


def _show(v) -> str:
    if isinstance(v, World):
        return v.value
    return str(v)


class _Invalid(Exception):
    pass


_DIRECTION_ALIASES = {"higher": Direction.HIGHER, "high": Direction.HIGHER, "lower": Direction.LOWER, "low": Direction.LOWER}
_VALUE_ALIASES = {"high": ValueLevel.HIGH, "higher": ValueLevel.HIGH, "low": ValueLevel.LOW, "lower": ValueLevel.LOW}


def _evaluate(node, env: dict, t: Theory):
    kind = node[0]
    if kind == "const":
        return node[1]
    if kind == "slot":
        return env[node[1]]
    head, args = node[1], node[2]
    if head[0] == "slot":
        fn = env[head[1]]
        arg = _evaluate(args[0], env, t)
        if not isinstance(arg, World):
            raise _Invalid()
        out = _apply(fn, Item(WORLD, arg, fn.start, fn.end), t)
        if out is None or out.cat != S:
            raise _Invalid()
        return out.sem
    prop, level, world = (_evaluate(a, env, t) for a in args)
    if isinstance(world, str):
        try:
            world = World(world)
        except ValueError:
            raise _Invalid() from None
    if not isinstance(prop, str) or not isinstance(level, str) or not isinstance(world, World):
        raise _Invalid()
    if prop not in t.properties:
        raise _Invalid()
    if head[1] == "qrel":
        if level not in _DIRECTION_ALIASES:
            raise _Invalid()
        return QRel(prop, _DIRECTION_ALIASES[level], world)
    if level not in _VALUE_ALIASES:
        raise _Invalid()
    return QVal(prop, _VALUE_ALIASES[level], world)


def _complete(rule: LexRule, bound: tuple, cat: Category, start: int, end: int, t: Theory, used: int) -> Item | None:
    try:
        sem = _evaluate(rule.template, dict(bound), t)
    except _Invalid:
        return None
    if cat == WORLD:
        if isinstance(sem, str):
            try:
                sem = World(sem)
            except ValueError:
                return None
        if not isinstance(sem, World):
            return None
    if cat == S and not isinstance(sem, (QRel, QVal)):
        return None
    return Item(cat, sem, start, end, rule, bound, rule.category == Category(None, WORLD, WORLD), used)


def _apply(fn: Item, arg: Item, t: Theory) -> Item | None:
    if not fn.cat.is_function or fn.cat.arg != arg.cat:
        return None
    slot = fn.rule.slots[len(fn.bound)]
    value = arg if arg.cat.is_function else arg.sem
    bound = fn.bound + ((slot, value),)
    cat = fn.cat.result
    start, end = min(fn.start, arg.start), max(fn.end, arg.end)
    used = fn.used + arg.used
    if cat.is_function:
        return Item(cat, None, start, end, fn.rule, bound, used=used)
    return _complete(fn.rule, bound, cat, start, end, t, used)


def _is_open(item: Item) -> bool:
    """Phrases that start with a blank describe the asked-about world and take no left argument."""
    return item.rule is not None and item.rule.phrase[0] == "_" and not item.bound


def _lexical(rule: LexRule, start: int, end: int, t: Theory) -> Item | None:
    if rule.category.is_function:
        return Item(rule.category, None, start, end, rule, used=end - start)
    return _complete(rule, (), rule.category, start, end, t, end - start)


@dataclass(frozen=True)
class _State:
    stack: tuple[Item, ...] = ()

    def key(self):
        s_cov = sum(i.width for i in self.stack if i.cat == S)
        cov = sum(i.width for i in self.stack)
        first = min((i.end for i in self.stack if i.cat == S), default=1 << 30)
        return (-s_cov, -cov, first, len(self.stack))


def _reduce(stack: tuple[Item, ...], t: Theory) -> tuple[Item, ...]:
    while len(stack) >= 2:
        if _is_open(stack[-1]):
            break
        out = _apply(stack[-1], stack[-2], t)
        if out is None:
            break
        stack = stack[:-2] + (out,)
    return stack


@dataclass
class Derivation:
    """Best analysis of a token range: what was built and what is still open."""

    items: list[Item]
    lo: int
    hi: int

    @property
    def atoms(self) -> list[Item]:
        return [i for i in self.items if i.cat == S]

    @property
    def pending(self) -> list[Item]:
        return [i for i in self.items if i.cat == S_WORLD]

    @property
    def worlds(self) -> list[Item]:
        return [i for i in self.items if i.cat == WORLD]

    @property
    def focus(self) -> World | None:
        marked = [i.sem for i in self.items if i.cat == WORLD and i.focus]
        return marked[-1] if marked else None

    def __str__(self) -> str:
        return " ".join(str(i) for i in self.items) or "(nothing)"


def derive(toks: list[str], g: Grammar, t: Theory, lo: int = 0, hi: int | None = None) -> Derivation:
    """Beam shift-reduce over ``toks[lo:hi]``; unrecognized tokens are skipped."""
    hi = len(toks) if hi is None else hi
    keys = [norm(x) for x in toks]
    frontier: dict[int, list[_State]] = {lo: [_State()]}
    finals: list[_State] = []
    pos = lo
    while pos <= hi:
        states = frontier.pop(pos, [])
        if not states:
            pos += 1
            continue
        uniq = list(dict.fromkeys(states))
        uniq.sort(key=_State.key)
        states = uniq[:BEAM]
        if pos == hi:
            finals.extend(states)
            break
        if keys[pos] in WORLD_TOKENS:
            n, items = 1, [Item(WORLD, World(keys[pos].lower()), pos, pos + 1)]
        else:
            n, rules = g.lookup(keys, pos, hi)
            items = [it for r in rules if (it := _lexical(r, pos, pos + n, t)) is not None]
        nxt = pos + max(n, 1)
        bucket = frontier.setdefault(nxt, [])
        for st in states:
            bucket.append(st)
            for it in items:
                pushed = st.stack + (it,)
                bucket.append(_State(pushed))
                reduced = _reduce(pushed, t)
                if reduced != pushed:
                    bucket.append(_State(reduced))
        pos += 1
    best = min(finals, key=_State.key) if finals else _State()
    return Derivation(list(best.stack), lo, hi)


# ------------------------------------------------------------------ questions


def _question_tokens(q) -> list[str]:
    if isinstance(q, str):
        return words(q)
    if isinstance(q, (list, tuple)):
        return list(q)
    return q.tokens


def _pick_setup(atoms: list[Item]):
    qvals = [a for a in atoms if isinstance(a.sem, QVal)]
    for i, a in enumerate(qvals):
        for b in qvals[i + 1 :]:
            if a.sem.property == b.sem.property and a.sem.world is not b.sem.world and a.sem.value is not b.sem.value:
                return (a.sem, b.sem)
    qrels = [a for a in atoms if isinstance(a.sem, QRel)]
    if qrels:
        best = min(qrels, key=lambda a: (-a.width, a.start))
        return (best.sem,)
    if qvals:
        a = qvals[0].sem
        other = ValueLevel.LOW if a.value is ValueLevel.HIGH else ValueLevel.HIGH
        return (a, QVal(a.property, other, a.world.opposite))
    return None


def _world_before(toks: list[str], pos: int) -> World | None:
    for i in range(pos - 1, -1, -1):
        if toks[i] in WORLD_TOKENS:
            return World(toks[i].lower())
    return None


def _first_world(toks: list[str], lo: int, hi: int) -> World | None:
    for i in range(lo, hi):
        if toks[i] in WORLD_TOKENS:
            return World(toks[i].lower())
    return None


def _world_after(toks: list[str], pos: int, hi: int, window: int = ATTACH_WINDOW) -> World | None:
    """A world shortly to the right of ``pos`` with no punctuation in between."""
    for i in range(pos, min(hi, pos + window + 1)):
        if toks[i] in WORLD_TOKENS:
            return World(toks[i].lower())
        if not toks[i][0].isalnum() and toks[i][0] != "_":
            return None
    return None


def _resolve(fn: Item, w: World | None, t: Theory) -> Item | None:
    if w is None:
        return None
    out = _apply(fn, Item(WORLD, w, fn.start, fn.start), t)
    return out if out is not None and out.cat == S else None


def _attach(fn: Item, toks: list[str], hi: int, t: Theory) -> Item | None:
    """Give an open comparative its world: the one just after it, else the last one before it."""
    if _is_open(fn):
        return None
    return _resolve(fn, _world_after(toks, fn.end, hi) or _world_before(toks, fn.start), t)


def parse_question(q, g: Grammar, t: Theory, trace: list | None = None) -> QuestionLF | None:
    """Parse a delexicalized question; None when no template-valid LF results."""
    log = trace if trace is not None else []
    toks = _question_tokens(q)
    seg = segment(toks)
    if seg is None:
        log.append("no (A)/(B) option markers")
        return None
    body = [derive(toks, g, t, lo, hi) for lo, hi in sentences(toks, *seg.body)]
    for d in body:
        log.append(f"body[{d.lo}:{d.hi}] {d}")
    if not body:
        log.append("empty question body")
        return None

    # complete derivations first, then open comparatives given a nearby world;
    # earlier sentences are preferred to the final (question) sentence
    setup = None
    for group in (body[:-1], body[-1:]):
        setup = _pick_setup([a for d in group for a in d.atoms])
        if setup:
            break
    if setup is None:
        for group in (body[:-1], body[-1:]):
            resolved = [r for d in group for fn in d.pending if (r := _attach(fn, toks, d.hi, t)) is not None]
            setup = _pick_setup(resolved)
            if setup:
                log.append(f"setup from open comparatives: {', '.join(map(str, setup))}")
                break
    if setup is None:
        log.append("no setup derived")
        return None

    last = body[-1]
    focus = next((d.focus for d in reversed(body) if d.focus is not None), None)
    if focus is None:
        focus = _first_world(toks, last.lo, last.hi)
    answers = []
    for name, (lo, hi) in (("A", seg.option_a), ("B", seg.option_b)):
        d = derive(toks, g, t, lo, hi)
        log.append(f"option {name} {d}")
        atom = None
        rels = [a for a in d.atoms if isinstance(a.sem, QRel)]
        if rels:
            atom = min(rels, key=lambda a: (-a.width, a.start))
        elif d.pending:
            atom = _resolve(d.pending[-1], focus, t)
        elif d.worlds and last.pending:
            atom = _resolve(last.pending[-1], d.worlds[-1].sem, t)
        atom = atom.sem if atom is not None and isinstance(atom.sem, QRel) else None
        if atom is None:
            log.append(f"option {name} yields no comparison")
            return None
        answers.append(atom)

    try:
        lf = QuestionLF(tuple(setup), answers[0], answers[1])
    except TemplateError as e:
        log.append(f"assembled LF is invalid: {e}")
        return None
    log.append(f"lf {lf}")
    return lf


def parse_all(questions: Iterable, g: Grammar, t: Theory) -> list[QuestionLF | None]:
    return [parse_question(q, g, t) for q in questions]
