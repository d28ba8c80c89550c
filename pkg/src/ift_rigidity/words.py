"""Free-group words, finite presentations and relator prefix expansion.

A word is a tuple of letters ``(generator_index, exponent)`` with exponent
``+1`` or ``-1``.  :class:`Word` always stores the free reduction.

Presentation file format (one directive per line)::

    # comment (also allowed after a directive)
    generators: a b
    relator: a b a^-1 b^-1
    relator: a^3

``generators:`` appears exactly once, before any ``relator:`` line; it may be
empty.  Names match ``[A-Za-z_][A-Za-z0-9_]*``.  A word is a whitespace
separated list of tokens ``name`` or ``name^k`` with ``k`` a nonzero integer.
Relators are kept in file order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple

from .exceptions import MalformedExponent, ParseError, UnknownGenerator, WordError

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
TOKEN_RE = re.compile(r"([^\s^]+)(?:\^(.*))?\Z")
EXPONENT_RE = re.compile(r"[+-]?\d+\Z")


def free_reduce(letters):
    """Cancel adjacent ``x x^-1`` pairs until none remain (single stack pass)."""
    out = []
    for gen, exp in letters:
        if out and out[-1][0] == gen and out[-1][1] == -exp:
            out.pop()
        else:
            out.append((gen, exp))
    return tuple(out)


@dataclass(frozen=True)
class Word:
    letters: tuple = ()

    def __post_init__(self):
        letters = []
        for letter in self.letters:
            gen, exp = letter
            if not isinstance(gen, int) or gen < 0:
                raise WordError(f"generator index must be a nonnegative int, got {gen!r}")
            if exp not in (1, -1):
                raise WordError(f"letter exponent must be +1 or -1, got {exp!r}")
            letters.append((int(gen), int(exp)))
        object.__setattr__(self, "letters", free_reduce(letters))

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Word(self.letters[item])
        return self.letters[item]

    def __mul__(self, other):
        return Word(self.letters + tuple(other.letters))

    def inverse(self):
        return Word(tuple((g, -e) for g, e in reversed(self.letters)))

    def max_generator(self):
        return max((g for g, _ in self.letters), default=-1)


def reduce(word):
    """Free reduction of a :class:`Word` or of a raw letter sequence."""
    letters = word.letters if isinstance(word, Word) else tuple(word)
    return Word(letters)


def parse_word(text, generators):
    """Parse ``"a^2 b^-1 a"`` against the generator names.

    >>> parse_word("a^2 b^-3", ["a", "b"]).letters
    ((0, 1), (0, 1), (1, -1), (1, -1), (1, -1))
    >>> len(parse_word("a a^-1", ["a"]))
    0
    """
    index = {name: i for i, name in enumerate(generators)}
    letters = []
    for token in text.split():
        m = TOKEN_RE.match(token)
        if m is None:
            raise MalformedExponent(f"malformed token {token!r}")
        name, exp_text = m.groups()
        if name not in index:
            raise UnknownGenerator(f"unknown generator {name!r} in token {token!r}")
        if exp_text is None:
            k = 1
        else:
            if not EXPONENT_RE.match(exp_text):
                raise MalformedExponent(f"exponent {exp_text!r} in token {token!r} is not an integer")
            k = int(exp_text)
            if k == 0:
                raise MalformedExponent(f"zero exponent in token {token!r}")
        sign = 1 if k > 0 else -1
        letters.extend([(index[name], sign)] * abs(k))
    return Word(tuple(letters))


def render_word(word, generators):
    """Canonical run-length text, the inverse of :func:`parse_word`."""
    parts = []
    letters = word.letters
    i = 0
    while i < len(letters):
        gen, exp = letters[i]
        j = i
        while j < len(letters) and letters[j] == (gen, exp):
            j += 1
        k = (j - i) * exp
        parts.append(generators[gen] if k == 1 else f"{generators[gen]}^{k}")
        i = j
    return " ".join(parts)


class Prefix(NamedTuple):
    prefix: Word
    sign: int
    generator: int


def relator_prefixes(t):
    """Prefix expansion used by the second coboundary.

    Entry ``j`` carries ``s_1^e_1 ... s_{j-1}^e_{j-1} s_j^e'_j`` where
    ``e'_j = 0`` for a positive letter and ``-1`` for a negative one, together
    with ``e_j`` and the index of ``s_j``.
    """
    letters = t.letters if isinstance(t, Word) else free_reduce(t)
    out = []
    for j, (gen, exp) in enumerate(letters):
        head = letters[:j] if exp == 1 else letters[:j] + ((gen, -1),)
        out.append(Prefix(Word(head), exp, gen))
    return out


@dataclass(frozen=True)
class Presentation:
    generators: tuple
    relators: tuple = ()

    def __post_init__(self):
        gens = tuple(self.generators)
        if len(set(gens)) != len(gens):
            raise WordError(f"duplicate generator names in {gens}")
        for name in gens:
            if not isinstance(name, str) or not NAME_RE.match(name):
                raise WordError(f"invalid generator name {name!r}")
        rels = tuple(r if isinstance(r, Word) else Word(tuple(r)) for r in self.relators)
        for i, r in enumerate(rels):
            if len(r) == 0:
                raise WordError(f"relator {i} is empty after reduction")
            if r.max_generator() >= len(gens):
                raise WordError(f"relator {i} uses a generator index out of range")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "relators", rels)

    @property
    def n_generators(self):
        return len(self.generators)

    @property
    def n_relators(self):
        return len(self.relators)

    def word(self, text):
        return parse_word(text, self.generators)

    def render(self, word):
        return render_word(word, self.generators)

    @classmethod
    def from_strings(cls, generators, relators=()):
        gens = tuple(generators.split()) if isinstance(generators, str) else tuple(generators)
        return cls(gens, tuple(parse_word(r, gens) for r in relators))


def _strip_comment(line):
    return line.split("#", 1)[0].strip()


def parse_presentation(text, source=None):
    """Parse the presentation file format described in the module docstring."""
    generators = None
    relators = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        key, sep, value = line.partition(":")
        key = key.strip()
        if not sep:
            raise ParseError(f"expected 'key: value', got {line!r}", lineno, source)
        if key == "generators":
            if generators is not None:
                raise ParseError("duplicate 'generators:' line", lineno, source)
            names = value.split()
            for name in names:
                if not NAME_RE.match(name):
                    raise ParseError(f"invalid generator name {name!r}", lineno, source)
            if len(set(names)) != len(names):
                raise ParseError("duplicate generator names", lineno, source)
            generators = tuple(names)
        elif key == "relator":
            if generators is None:
                raise ParseError("'relator:' before 'generators:'", lineno, source)
            try:
                word = parse_word(value, generators)
            except WordError as exc:
                raise ParseError(str(exc), lineno, source) from None
            if len(word) == 0:
                raise ParseError("relator reduces to the empty word", lineno, source)
            relators.append(word)
        else:
            raise ParseError(f"unknown key {key!r}", lineno, source)
    if generators is None:
        raise ParseError("missing 'generators:' line", None, source)
    return Presentation(generators, tuple(relators))


def render_presentation(pres):
    lines = ["generators: " + " ".join(pres.generators)]
    lines.extend("relator: " + pres.render(r) for r in pres.relators)
    return "\n".join(lines) + "\n"


def read_presentation(path):
    with open(path, encoding="utf-8") as fh:
        return parse_presentation(fh.read(), source=str(path))
