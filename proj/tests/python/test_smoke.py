import math

import numpy as np
import pytest

import ruledmin


def test_catalog_lists_entries():
    names = ruledmin.catalog_names()
    assert "equilateral-torus" in names
    manifest = ruledmin.catalog()
    assert {entry["name"] for entry in manifest["entries"]} == set(names)


def test_torus_point_on_sphere_and_ellipse():
    p = ruledmin.surface_point("equilateral-torus", 0.3, 1.1)
    assert p.shape == (6,)
    assert abs(np.linalg.norm(p) - 1.0) < 1e-12
    kappa, mu = ruledmin.curvature_ellipse("equilateral-torus", 0.3, 1.1)
    assert abs(kappa - math.sqrt(0.5)) < 1e-9
    assert abs(mu - math.sqrt(0.5)) < 1e-9


def test_shape_operators_match_oracle():
    t = np.array([0.8])
    a_xi, a_eta, omega = ruledmin.shape_operators("equilateral-torus", 0.6, 0.4, 1.3, t)
    f_xi, f_eta, f_omega = ruledmin.shape_operators("equilateral-torus", 0.6, 0.4, 1.3, t, oracle=True)
    assert a_xi.shape == (4, 4)
    assert abs(omega - f_omega) < 1e-9
    assert np.max(np.abs(a_xi - f_xi)) < 1e-4
    assert np.max(np.abs(a_eta - f_eta)) < 1e-4
    assert abs(np.trace(a_xi)) < 1e-10


def test_flat_torus_norm_and_homogeneity():
    base = ruledmin.norm_sq("equilateral-torus", 0.6, 0.3, 1.2, np.array([0.8]))
    assert abs(base - 6.0) < 1e-9
    scaled = ruledmin.norm_sq("equilateral-torus", 1.2, 0.3, 1.2, np.array([1.6]))
    assert abs(scaled * 4.0 - base) < 1e-9


def test_vertex_is_singular():
    assert ruledmin.is_singular("equilateral-torus", 0.0, 0.1, 0.2, np.array([0.0]))
    assert not ruledmin.is_singular("equilateral-torus", 0.6, 0.1, 0.2, np.array([0.8]))


def test_family_member_at_zero_is_base():
    t = np.array([0.3, 0.4])
    s = math.sqrt(1.0 - 0.25)
    base = ruledmin.shape_operators("boruvka-sphere", s, 1.0, 0.5, t)
    member = ruledmin.family_member("boruvka-sphere", s, 1.0, 0.5, t, 0.0)
    assert np.allclose(base[0], member[0], atol=1e-14)
    assert np.allclose(base[1], member[1], atol=1e-14)


def test_reports_are_dicts_and_deterministic():
    a = ruledmin.ruled_verify("equilateral-torus", seed=3, samples=20)
    b = ruledmin.ruled_verify("equilateral-torus", seed=3, samples=20)
    assert a == b
    assert a["schema"] == "1"
    ids = [c["id"] for c in a["checks"]]
    assert "ruled.oracle" in ids


def test_errors_map_to_exceptions():
    with pytest.raises(ruledmin.GeometryError) as info:
        ruledmin.surface_verify("nope")
    assert info.value.kind == "unknown-surface"
    with pytest.raises(ruledmin.GeometryError) as info:
        ruledmin.ruled_verify("clifford-control")
    assert info.value.kind == "isotropy-required"
    with pytest.raises(ruledmin.ConfigError):
        ruledmin.ruled_verify("equilateral-torus", settings={"tol.rank": "-1"})
