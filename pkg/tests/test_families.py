import math

import numpy as np
import pytest

from dyadvar import ArgumentError, PiecewiseConstantFn, integrate
from dyadvar.families import (
    FamilySpec,
    H1Atom,
    check_function,
    gen_atoms,
    gen_bundles,
    gen_functions,
    haar_atom,
)


def test_same_seed_same_family():
    spec = FamilySpec(seed=5, count=20)
    assert gen_functions(spec) == gen_functions(spec)
    assert gen_functions(spec) != gen_functions(FamilySpec(seed=6, count=20))


def test_larger_count_extends_family():
    small = gen_functions(FamilySpec(count=10))
    large = gen_functions(FamilySpec(count=25))
    assert large[:10] == small


@pytest.mark.parametrize(
    "kw",
    [{"count": 0}, {"pieces": (0, 3)}, {"pieces": (4, 2)}, {"lattice_M": 99}, {"value_range": (1.0, 1.0)}, {"seed": -1}],
)
def test_invalid_spec_rejected(kw):
    with pytest.raises(ArgumentError):
        FamilySpec(**kw)


def test_generated_functions_satisfy_invariants():
    spec = FamilySpec(seed=123, count=1000)
    fns = gen_functions(spec)
    assert len(fns) == 1000
    assert all(check_function(f, spec) == [] for f in fns)


def test_checker_flags_violations():
    spec = FamilySpec(lattice_M=2, support_N=1)
    assert check_function(PiecewiseConstantFn([0.0, 0.3], [1.0]), spec) == ["breakpoint off the lattice"]
    assert "support outside [-2^N, 2^N]" in check_function(PiecewiseConstantFn([0.0, 4.0], [1.0]), spec)


def test_bundles_shape_and_determinism():
    spec = FamilySpec(count=5)
    b = gen_bundles(spec, 3)
    assert len(b) == 5 and all(len(x) == 3 for x in b)
    assert b == gen_bundles(spec, 3)
    with pytest.raises(ArgumentError):
        gen_bundles(spec, 0)


def test_haar_atom_on_unit_interval():
    a = haar_atom(0.0, 0)
    assert a.fn == PiecewiseConstantFn([0.0, 0.5, 1.0], [1.0, -1.0])
    assert a.violations() == []
    assert a.fn.lp_norm(math.inf) == 1.0 / a.length


def test_generated_atoms_are_atoms():
    spec = FamilySpec(seed=9, count=300)
    for atom in gen_atoms(spec, range(-6, 7)):
        assert atom.violations() == []
        a, b = atom.interval
        assert abs(integrate(atom.fn, a, b)) <= 1e-14
        lo, hi = atom.fn.support
        assert a <= lo and hi <= b
        assert atom.fn.lp_norm(math.inf) == pytest.approx(1.0 / atom.length, rel=1e-15)


def test_atom_scales_cycle():
    atoms = gen_atoms(FamilySpec(count=6), [-1, 2])
    assert [math.log2(a.length) for a in atoms] == [-1, 2, -1, 2, -1, 2]
    with pytest.raises(ArgumentError):
        gen_atoms(FamilySpec(count=2), [])


@pytest.mark.parametrize("k", [-4, -1, 3])
def test_dilated_atom_is_an_atom(k):
    for atom in gen_atoms(FamilySpec(count=10), [0, 2]):
        d = atom.dilated(k)
        assert d.violations() == []
        assert d.length == pytest.approx(math.ldexp(atom.length, -k), rel=1e-15)
        x = np.linspace(*d.interval, 11)[:-1]
        assert np.allclose(d.fn(x), math.ldexp(1.0, k) * atom.fn(np.ldexp(x, k)))


def test_violations_detected():
    bump = H1Atom((0.0, 1.0), PiecewiseConstantFn([0.0, 1.0], [1.0]))
    assert bump.violations() == ["nonzero integral"]
    tall = H1Atom((0.0, 1.0), PiecewiseConstantFn([0.0, 0.5, 1.0], [2.0, -2.0]))
    assert tall.violations() == ["sup norm exceeds 1/|I|"]
    wide = H1Atom((0.0, 1.0), PiecewiseConstantFn([0.0, 1.0, 2.0], [0.5, -0.5]))
    assert "support leaves the interval" in wide.violations()
