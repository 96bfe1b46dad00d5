import numpy as np
import pytest

from stabdis import dmrg, io, models, mps, oracle
from stabdis.models import ModelSpec


@pytest.mark.parametrize(
    "spec",
    [
        ModelSpec("XXZ", 10, {"Jz": -0.4}),
        ModelSpec("TCI", 10, {"lam": 0.428}),
        ModelSpec("IsingTF", 10, {"h": 0.7}),
    ],
    ids=lambda s: s.family,
)
def test_energy_matches_ed(spec):
    res = dmrg.solve(spec, chi_max=32)
    e0, psi = oracle.exact_ground_state(spec)
    assert res.converged
    assert res.energy == pytest.approx(e0, abs=1e-9)
    assert abs(np.vdot(psi, mps.to_dense(res.state))) == pytest.approx(1.0, abs=1e-6)


def test_cluster_pin_selects_state_and_reports_unpinned_energy():
    spec = ModelSpec("Cluster1", 10, {"h": 0.5})
    res = dmrg.solve(spec, chi_max=32)
    e0 = oracle.exact_ground_state(spec)[0]
    assert res.energy == pytest.approx(e0, abs=1e-5)
    pinned = spec.with_params(edge_field=dmrg.EDGE_PIN)
    _, psi = oracle.exact_ground_state(pinned)
    assert abs(np.vdot(psi, mps.to_dense(res.state))) == pytest.approx(1.0, abs=1e-6)


def test_result_unpacks_and_is_deterministic():
    spec = ModelSpec("XXZ", 8, {"Jz": 0.5})
    e1, s1, _ = dmrg.solve(spec, chi_max=16, seed=3)
    e2, s2, _ = dmrg.solve(spec, chi_max=16, seed=3)
    assert e1 == e2
    assert all(np.array_equal(a, b) for a, b in zip(s1.tensors, s2.tensors))


def test_checkpoint_resume(tmp_path):
    spec = ModelSpec("TCI", 10, {"lam": 0.2})
    mpo = models.build(spec)
    res = dmrg.ground_state(mpo, chi_max=8, n_sweeps=2, min_sweeps=1)
    path = dmrg.save_checkpoint(tmp_path / "ck.npz", res.state, res, seed=0)
    more = dmrg.resume(mpo, path, chi_max=32)
    assert more.energy <= res.energy + 1e-12
    assert more.energy == pytest.approx(oracle.exact_ground_state(spec)[0], abs=1e-9)
