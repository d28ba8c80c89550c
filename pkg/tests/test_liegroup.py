import math

import numpy as np
import pytest
from scipy.linalg import logm

from ift_rigidity.exceptions import InvalidRepresentation, NotInvariant, OutOfChartDomain, ParseError
from ift_rigidity.liegroup import (
    MatrixGroup,
    Representation,
    ad_matrix,
    conjugate_images,
    evaluate_word,
    exp,
    linear_action_derivative,
    log,
    parse_representation,
    preset,
    render_representation,
    rotation,
    stabilizer_algebra,
)
from ift_rigidity.words import Presentation, Word

from conftest import CORPUS, load


def random_element(group, rng, scale=0.3):
    return exp(group.algebra(scale * rng.standard_normal(group.dim)))


def test_presets():
    assert preset("gl2").dim == 4
    assert preset("SL(3)").dim == 8
    assert preset("so3").dim == 3
    h, e, f = preset("sl2").basis
    assert np.array_equal(h, np.diag([1.0, -1.0]))
    assert np.array_equal(e, [[0, 1], [0, 0]]) and np.array_equal(f, [[0, 0], [1, 0]])
    assert np.array_equal(preset("so2").basis[0], [[0, -1], [1, 0]])
    for bad in ("sp4", "so1", "gl"):
        with pytest.raises(ValueError):
            preset(bad)


def test_exp_examples():
    assert np.array_equal(exp(np.zeros((3, 3))), np.eye(3))
    theta = math.pi / 3
    r = exp(np.array([[0.0, -theta], [theta, 0.0]]))
    assert np.abs(r - [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]).max() <= 1e-14
    x = np.random.default_rng(3).standard_normal((4, 4))
    assert np.abs(exp(x) @ exp(-x) - np.eye(4)).max() <= 1e-12


def test_log_examples(rng):
    assert np.array_equal(log(np.eye(2)), np.zeros((2, 2)))
    x = rng.standard_normal((3, 3))
    x *= 0.1 / np.linalg.norm(x, 2)
    assert np.abs(log(exp(x)) - x).max() <= 1e-10
    with pytest.raises(OutOfChartDomain):
        log(np.eye(2) + 1.5 * np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_log_round_trip_and_logm_oracle(rng):
    for _ in range(100):
        n = int(rng.integers(1, 5))
        x = rng.standard_normal((n, n))
        x *= rng.uniform(0, 0.5) / max(np.linalg.norm(x, 2), 1e-300)
        g = exp(x)
        if np.linalg.norm(g - np.eye(n), 2) >= 1:
            continue
        lg = log(g)
        assert np.abs(lg - x).max() <= 1e-9
        assert np.abs(lg - np.real(logm(g))).max() <= 1e-9
        assert np.abs(exp(lg) - g).max() <= 1e-10


def test_log_near_chart_edge():
    g = np.diag([1.9, 0.2])
    assert np.abs(exp(log(g)) - g).max() <= 1e-10


def test_ad_examples():
    sl2 = preset("sl2")
    assert np.allclose(ad_matrix(np.eye(2), sl2), np.eye(3))
    so2 = preset("so2")
    for t in (0.1, 1.0, 2.5):
        assert ad_matrix(rotation(t), so2) == pytest.approx(np.eye(1), abs=1e-12)
    assert np.abs(ad_matrix(np.diag([2.0, 0.5]), sl2) - np.diag([1.0, 4.0, 0.25])).max() <= 1e-12


def test_ad_not_invariant():
    with pytest.raises(NotInvariant):
        ad_matrix(np.array([[1.0, 1.0], [0.0, 1.0]]), preset("so2"))


@pytest.mark.parametrize("key", ["gl2", "sl2", "so3", "sl3"])
def test_ad_multiplicative(rng, key):
    group = preset(key)
    for _ in range(20):
        g, h = random_element(group, rng), random_element(group, rng)
        lhs = ad_matrix(g @ h, group)
        assert np.abs(lhs - ad_matrix(g, group) @ ad_matrix(h, group)).max() <= 1e-9


def test_group_membership():
    assert preset("so2").contains(rotation(0.4))
    assert not preset("so2").contains(np.diag([1.0, -1.0]))
    assert preset("sl2").contains(np.diag([2.0, 0.5]))
    assert not preset("sl2").contains(np.diag([2.0, 1.0]))
    assert not preset("gl2").contains(np.zeros((2, 2)))


def test_custom_basis_rejected_when_dependent():
    b = np.eye(2)
    with pytest.raises(ValueError):
        MatrixGroup("bad", 2, (b, 2 * b))


def left_fold(rep, word):
    out = np.eye(rep.n)
    for gen, e in word.letters:
        m = rep.images[gen]
        out = out @ (m if e == 1 else np.linalg.inv(m))
    return out


def test_evaluate_word(rng):
    pres, rep = load("surface2.pres", "surface2_so3.rep")
    assert np.array_equal(evaluate_word(rep, Word()), np.eye(3))
    assert np.abs(evaluate_word(rep, pres.relators[0]) - np.eye(3)).max() <= 1e-10
    for _ in range(30):
        letters = tuple((int(rng.integers(0, 4)), int(rng.choice([-1, 1]))) for _ in range(12))
        w = Word(letters)
        assert np.abs(evaluate_word(rep, w) - left_fold(rep, w)).max() <= 1e-12


@pytest.mark.parametrize("pres_name,rep_name", CORPUS)
def test_corpus_relators_trivial(pres_name, rep_name):
    pres, rep = load(pres_name, rep_name)
    for r in pres.relators:
        assert np.abs(evaluate_word(rep, r) - np.eye(rep.n)).max() <= 1e-10


def test_representation_rejects_defect():
    pres = Presentation.from_strings("s", ["s^3"])
    with pytest.raises(InvalidRepresentation):
        Representation(pres, (rotation(2 * math.pi / 3 + 1e-2),), preset("so2"))
    with pytest.raises(InvalidRepresentation):
        Representation(pres, (np.diag([1.0, -1.0]),), preset("so2"))
    with pytest.raises(InvalidRepresentation):
        Representation(pres, (), preset("so2"))


def test_representation_file_round_trip():
    pres, rep = load("z3.pres", "z3_gl2.rep")
    again = parse_representation(render_representation(rep), pres)
    assert all(np.array_equal(a, b) for a, b in zip(rep.images, again.images))
    assert again.group.name == "gl2"


@pytest.mark.parametrize("text,line", [
    ("s: 1 0 ; 0 1\n", 1),
    ("group: gl2\nt: 1 0 ; 0 1\n", 2),
    ("group: gl2\ns: 1 0 ; 0\n", 2),
    ("group: gl2\ns: 1 0 ; 0 x\n", 2),
    ("group: foo\n", 1),
    ("group: gl2\ns: 1 0 ; 0 1\ns: 1 0 ; 0 1\n", 3),
])
def test_representation_parse_errors(text, line):
    pres = Presentation.from_strings("s")
    with pytest.raises(ParseError) as info:
        parse_representation(text, pres, source="r.txt")
    assert info.value.line == line


def test_representation_missing_generator():
    pres = Presentation.from_strings("a b")
    with pytest.raises(ParseError):
        parse_representation("group: gl2\na: 1 0 ; 0 1\n", pres)


def test_conjugate_images_is_homomorphism(rng):
    pres, rep = load("z3.pres", "z3_gl2.rep")
    h = exp(1e-2 * rng.standard_normal((2, 2)))
    images = conjugate_images(rep, h)
    assert np.abs(images[0] - h @ rep.images[0] @ np.linalg.inv(h)).max() <= 1e-14
    rep2 = Representation(pres, images, rep.group)
    assert np.abs(evaluate_word(rep2, pres.relators[0]) - np.eye(2)).max() <= 1e-10


def test_stabilizer_examples():
    gl2 = preset("gl2")
    basis = stabilizer_algebra(linear_action_derivative(gl2, np.zeros(2)))
    assert basis.shape == (4, 4)

    d = linear_action_derivative(gl2, np.array([1.0, 0.0]))
    basis = stabilizer_algebra(d)
    assert basis.shape[1] == 2
    for col in basis.T:
        m = gl2.algebra(col)
        assert np.abs(m[:, 0]).max() <= 1e-12
        assert np.linalg.norm(d @ col) <= 1e-10
    assert np.allclose(basis.T @ basis, np.eye(2))

    so2 = preset("so2")
    assert stabilizer_algebra(linear_action_derivative(so2, np.array([1.0, 0.0]))).shape[1] == 0


def test_stabilizer_property(rng):
    for key in ("gl3", "sl3", "so3"):
        group = preset(key)
        for _ in range(10):
            p = rng.standard_normal(group.n)
            d = linear_action_derivative(group, p)
            basis = stabilizer_algebra(d)
            for col in basis.T:
                assert np.linalg.norm(d @ col) <= 1e-10
                assert np.linalg.norm(group.algebra(col) @ p) <= 1e-10
