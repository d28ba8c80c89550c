"""Matrix Lie groups: presets, exponential and logarithm, adjoint matrices,
word evaluation, representation validation and stabilizer algebras.

A group is configured by its ambient size ``n`` and a basis of its Lie
algebra; algebra elements are handled in coordinates with respect to that
basis.  ``gl<n>``, ``sl<n>`` and ``so<n>`` ship as presets.

Representation file format::

    group: so3
    a: 1 0 0 ; 0 0 -1 ; 0 1 0
    b: ...

One ``name: row ; row ; ...`` line per generator, every generator of the
presentation exactly once, entries in row-major order.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from ._validation import check_square, check_vector
from .exceptions import (
    InvalidRepresentation,
    NotInvariant,
    OutOfChartDomain,
    ParseError,
)
from .linops import rank_threshold
from .words import NAME_RE, Presentation

PRESET_RE = re.compile(r"(gl|sl|so)\s*\(?\s*(\d+)\s*\)?\Z", re.IGNORECASE)


def _unit(n, i, j):
    m = np.zeros((n, n))
    m[i, j] = 1.0
    return m


def gl_basis(n):
    return [_unit(n, i, j) for i in range(n) for j in range(n)]


def sl_basis(n):
    """Diagonal ``E_ii - E_(i+1)(i+1)``, then upper then lower elementary
    matrices; for n = 2 this is (h, e, f)."""
    diag = [_unit(n, i, i) - _unit(n, i + 1, i + 1) for i in range(n - 1)]
    upper = [_unit(n, i, j) for i in range(n) for j in range(i + 1, n)]
    lower = [_unit(n, i, j) for i in range(n) for j in range(i)]
    return diag + upper + lower


def so_basis(n):
    """``E_ji - E_ij`` for i < j; for n = 2 this is [[0, -1], [1, 0]]."""
    return [_unit(n, j, i) - _unit(n, i, j) for i in range(n) for j in range(i + 1, n)]


@dataclass(frozen=True)
class MatrixGroup:
    name: str
    n: int
    basis: tuple
    kind: str = "custom"
    _coords: np.ndarray = field(init=False, repr=False, compare=False)
    _stack: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        basis = tuple(check_square(b, "basis element") for b in self.basis)
        if any(b.shape != (self.n, self.n) for b in basis):
            raise ValueError(f"basis elements must be {self.n}x{self.n}")
        stack = np.array([b.reshape(-1) for b in basis]).T.reshape(self.n * self.n, len(basis))
        if len(basis) and np.linalg.matrix_rank(stack) != len(basis):
            raise ValueError("algebra basis is linearly dependent")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "_stack", stack)
        gram = stack.T @ stack
        if not len(basis):
            coords = np.zeros((0, self.n * self.n))
        elif np.array_equal(gram, np.diag(np.diag(gram))):
            # orthogonal basis: plain projection, exact on basis combinations
            coords = stack.T / np.diag(gram)[:, None]
        else:
            coords = np.linalg.pinv(stack)
        object.__setattr__(self, "_coords", coords)

    @property
    def dim(self):
        return len(self.basis)

    @property
    def coord_scale(self):
        """``beta`` with ``||algebra(xi)||_2 <= beta ||xi||``."""
        return float(np.linalg.norm(self._stack, 2)) if self.dim else 1.0

    def algebra(self, xi):
        """Matrix ``sum_k xi_k B_k``."""
        xi = check_vector(xi, self.dim, name="xi")
        return (self._stack @ xi).reshape(self.n, self.n)

    def coords(self, x, tol=1e-9):
        """Coordinates of an algebra matrix; :class:`NotInvariant` when ``x`` is
        not in the span of the basis."""
        flat = np.asarray(x, dtype=float).reshape(-1)
        xi = self._coords @ flat
        res = np.linalg.norm(self._stack @ xi - flat)
        if res > tol * (1.0 + np.linalg.norm(flat)):
            raise NotInvariant(f"matrix leaves the Lie algebra of {self.name} (residual {res:.3e})")
        return xi

    def contains(self, g, tol=1e-9):
        g = np.asarray(g, dtype=float)
        if g.shape != (self.n, self.n) or not np.all(np.isfinite(g)):
            return False
        det = np.linalg.det(g)
        scale = max(1.0, float(np.abs(g).max()) ** self.n)
        if abs(det) <= tol * scale:
            return False
        if self.kind == "sl":
            return abs(det - 1.0) <= tol * scale
        if self.kind == "so":
            return np.linalg.norm(g.T @ g - np.eye(self.n)) <= tol and det > 0
        return True


def preset(key):
    """``"gl2"``, ``"SL(3)"``, ``"so3"`` and so on."""
    m = PRESET_RE.match(key.strip())
    if m is None:
        raise ValueError(f"unknown group preset {key!r}; expected gl<n>, sl<n> or so<n>")
    kind, n = m.group(1).lower(), int(m.group(2))
    if n < 1 or (kind in ("sl", "so") and n < 2):
        raise ValueError(f"invalid size in group preset {key!r}")
    basis = {"gl": gl_basis, "sl": sl_basis, "so": so_basis}[kind](n)
    return MatrixGroup(f"{kind}{n}", n, tuple(basis), kind)


def exp(x):
    """Matrix exponential (scaling and squaring, degree-13 Pade)."""
    return expm(check_square(x, "algebra matrix"))


def _sqrtm_db(a, max_iter=50):
    y, z = a, np.eye(a.shape[0])
    for _ in range(max_iter):
        y_next = 0.5 * (y + np.linalg.inv(z))
        z = 0.5 * (z + np.linalg.inv(y))
        done = np.linalg.norm(y_next - y) <= 1e-15 * np.linalg.norm(y_next)
        y = y_next
        if done:
            break
    return y


def log(g):
    """Principal logarithm of ``g`` with ``||g - I|| < 1`` (spectral norm).

    Square roots bring ``g`` within 1/4 of the identity, then the series
    ``log a = 2 * sum_k Z^(2k+1)/(2k+1)`` with ``Z = (a - I)(a + I)^-1``.
    """
    g = check_square(g, "group element")
    n = g.shape[0]
    eye = np.eye(n)
    dist = np.linalg.norm(g - eye, 2) if n else 0.0
    if not dist < 1.0:
        raise OutOfChartDomain(f"||g - I|| = {dist:.6g} >= 1")
    a = g
    halvings = 0
    while np.linalg.norm(a - eye, 2) > 0.25:
        a = _sqrtm_db(a)
        halvings += 1
    z = np.linalg.solve((a + eye).T, (a - eye).T).T
    z2 = z @ z
    term = z.copy()
    total = z.copy()
    for k in range(1, 200):
        term = term @ z2
        step = term / (2 * k + 1)
        total += step
        if np.abs(step).max(initial=0.0) <= 1e-18 * max(1.0, np.abs(total).max()):
            break
    return (2.0 ** (halvings + 1)) * total


def ad_matrix(g, basis, tol=1e-9):
    """Matrix of ``v -> g v g^-1`` on the Lie algebra, in the given basis.

    ``basis`` is a :class:`MatrixGroup` or a list of algebra matrices.
    """
    group = basis if isinstance(basis, MatrixGroup) else MatrixGroup("custom", np.shape(basis[0])[0], tuple(basis))
    g = check_square(g, "group element")
    ginv = np.linalg.inv(g)
    cols = [group.coords(g @ b @ ginv, tol) for b in group.basis]
    return np.array(cols).T.reshape(group.dim, group.dim)


def word_product(images, inverses, word, n=None):
    """Ordered product of ``images[s]`` or ``inverses[s]`` along ``word``."""
    if n is None:
        n = images[0].shape[0]
    out = np.eye(n)
    for gen, exp_ in word:
        out = out @ (images[gen] if exp_ == 1 else inverses[gen])
    return out


@dataclass(frozen=True)
class Representation:
    """Images ``r(s)`` of the generators, validated to satisfy every relator."""

    presentation: Presentation
    images: tuple
    group: MatrixGroup
    rel_tol: float = 1e-10
    inverses: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pres, group = self.presentation, self.group
        if len(self.images) != pres.n_generators:
            raise InvalidRepresentation(f"{len(self.images)} images for {pres.n_generators} generators")
        images = []
        for name, img in zip(pres.generators, self.images):
            m = np.array(img, dtype=float)
            if m.shape != (group.n, group.n):
                raise InvalidRepresentation(f"image of {name} has shape {m.shape}, expected "
                                            f"{(group.n, group.n)}")
            if not np.all(np.isfinite(m)):
                raise InvalidRepresentation(f"image of {name} has non-finite entries")
            if not group.contains(m):
                raise InvalidRepresentation(f"image of {name} is not in {group.name}")
            m.setflags(write=False)
            images.append(m)
        images = tuple(images)
        inverses = tuple(np.linalg.inv(m) for m in images)
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "inverses", inverses)
        defects = self.relator_defects()
        scale = self._defect_scale()
        for i, (d, word) in enumerate(zip(defects, pres.relators)):
            limit = self.rel_tol * max(1, len(word)) * scale
            if d > limit:
                raise InvalidRepresentation(
                    f"relator {i} ({pres.render(word)}) evaluates to I only within {d:.3e} > {limit:.3e}")

    def _defect_scale(self):
        conds = [np.linalg.cond(m) for m in self.images]
        return max([1.0] + conds)

    @property
    def n(self):
        return self.group.n

    def relator_defects(self):
        eye = np.eye(self.n)
        return [float(np.linalg.norm(evaluate_word(self, w) - eye, 2)) for w in self.presentation.relators]

    def image(self, name):
        return self.images[self.presentation.generators.index(name)]


def evaluate_word(rep, w):
    """``r(w)`` for a word in the generators; the empty word gives I."""
    return word_product(rep.images, rep.inverses, w, rep.n)


def stabilizer_algebra(action_derivative, rank_tol=None):
    """Orthonormal basis (as columns) of the kernel of the derived action at a
    point, i.e. of the Lie algebra of the stabilizer."""
    a = np.asarray(action_derivative, dtype=float)
    d = a.shape[1]
    if a.size == 0:
        return np.eye(d)
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    rank = int(np.sum(s > rank_threshold(s, a.shape, rank_tol))) if s[0] > 0 else 0
    return vt[rank:].T.copy()


def linear_action_derivative(group, p):
    """Derived action ``x -> -x p`` of the group's algebra on ``n``-space at
    ``p``, as an ``n x d`` matrix."""
    p = check_vector(p, group.n, name="p")
    if group.dim == 0:
        return np.zeros((group.n, 0))
    return np.array([-(b @ p) for b in group.basis]).T


def _parse_matrix(value, n, lineno, source):
    rows = [r.split() for r in value.split(";")]
    if len(rows) == 1 and len(rows[0]) == n * n:
        rows = [rows[0][i * n:(i + 1) * n] for i in range(n)]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ParseError(f"expected {n} rows of {n} entries", lineno, source)
    try:
        m = np.array([[float(x) for x in r] for r in rows])
    except ValueError as exc:
        raise ParseError(f"bad matrix entry: {exc}", lineno, source) from None
    if not np.all(np.isfinite(m)):
        raise ParseError("non-finite matrix entry", lineno, source)
    return m


def parse_representation(text, presentation, source=None, rel_tol=1e-10):
    """Parse a representation file against ``presentation``.

    Format errors raise :class:`ParseError`; a well-formed file whose matrices
    are not a homomorphism into the group raises
    :class:`InvalidRepresentation`.
    """
    group = None
    mats = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        key = key.strip()
        if not sep:
            raise ParseError(f"expected 'key: value', got {line!r}", lineno, source)
        if key == "group":
            if group is not None:
                raise ParseError("duplicate 'group:' line", lineno, source)
            try:
                group = preset(value)
            except ValueError as exc:
                raise ParseError(str(exc), lineno, source) from None
            continue
        if group is None:
            raise ParseError("matrix line before 'group:'", lineno, source)
        if not NAME_RE.match(key) or key not in presentation.generators:
            raise ParseError(f"unknown generator {key!r}", lineno, source)
        if key in mats:
            raise ParseError(f"duplicate matrix for {key!r}", lineno, source)
        mats[key] = _parse_matrix(value, group.n, lineno, source)
    if group is None:
        raise ParseError("missing 'group:' line", None, source)
    missing = [g for g in presentation.generators if g not in mats]
    if missing:
        raise ParseError(f"no matrix for generator(s) {', '.join(missing)}", None, source)
    return Representation(presentation, tuple(mats[g] for g in presentation.generators), group, rel_tol)


def render_representation(rep):
    lines = [f"group: {rep.group.name}"]
    for name, m in zip(rep.presentation.generators, rep.images):
        rows = " ; ".join(" ".join(repr(float(x)) for x in row) for row in m)
        lines.append(f"{name}: {rows}")
    return "\n".join(lines) + "\n"


def read_representation(path, presentation, rel_tol=1e-10):
    with open(path, encoding="utf-8") as fh:
        return parse_representation(fh.read(), presentation, source=str(path), rel_tol=rel_tol)


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def conjugate_images(rep, h):
    """Images of ``h r h^-1``."""
    hinv = np.linalg.inv(h)
    return tuple(h @ m @ hinv for m in rep.images)

