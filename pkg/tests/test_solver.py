import numpy as np
import pytest

from gl3ff.errors import NoConvergence
from gl3ff.model import RootConfig, Twist, bethe_defect, tau, xxx_chain
from gl3ff.solver import (SolveRequest, continue_in_twist, distinct_states,
                          solve_bethe, states_equal)

SQ3 = np.sqrt(3.0)


def test_single_root_homogeneous_l2():
    # (u+1)^2 = u^2  =>  u = -1/2
    model = xxx_chain(2, (0.0, 0.0), 1.0)
    st = solve_bethe(SolveRequest(model=model, a=1, b=0))
    assert abs(st.u[0] - (-0.5)) < 1e-12
    assert st.residual <= 1e-12


def test_single_root_homogeneous_l3_pair():
    # (u+1)^3 = u^3  =>  u = -1/2 +- i/(2 sqrt 3)
    model = xxx_chain(3, (0.0, 0.0, 0.0), 1.0)
    states = distinct_states(model, 1, 0, n_seeds=24)
    assert len(states) == 2
    expect = sorted([-0.5 - 1j / (2 * SQ3), -0.5 + 1j / (2 * SQ3)],
                    key=lambda z: z.imag)
    got = sorted((st.u[0] for st in states), key=lambda z: z.imag)
    for g, e in zip(got, expect):
        assert abs(g - e) < 1e-12


def test_returned_states_pass_defect_recheck(state_lib):
    for L in (2, 3, 4, 5):
        for key in ("m10", "m21", "m20", "m31"):
            for st in state_lib[L].get(key, ()):
                d = bethe_defect(st.roots, st.twist, st.model)
                assert np.max(np.abs(d)) <= 10 * 1e-12


def test_solved_tau_is_oracle_eigenvalue(state_lib):
    import gl3ff.oracle as orc
    spec, model = state_lib[3]["spec"], state_lib[3]["model"]
    st = state_lib[3]["m21"][0]
    idx = orc.state_sector(spec, 2, 1)
    for w in (0.83 + 0.62j, -1.1 - 0.4j):
        eigs = np.linalg.eigvals(orc.transfer_matrix(w, spec)[np.ix_(idx, idx)])
        tv = tau(w, st.roots, model)
        assert np.min(np.abs(eigs - tv)) <= 1e-8 * abs(tv)


def test_no_untwisted_states_with_single_pair():
    # f(v, u) = 1 has no finite solution, so the (1,1) sector is empty
    model = xxx_chain(2, (0.05 + 0.02j, -0.04 - 0.01j), 1.0)
    assert distinct_states(model, 1, 1, n_seeds=24) == []


def test_twisted_pair_sector_solvable():
    model = xxx_chain(2, (0.05 + 0.02j, -0.04 - 0.01j), 1.0)
    tw = Twist(1.0, 1.0, 0.6 + 0.1j)
    states = distinct_states(model, 1, 1, twist=tw, n_seeds=32)
    assert states
    for st in states:
        assert np.max(np.abs(bethe_defect(st.roots, tw, st.model))) < 1e-10


def test_solve_with_explicit_seed_roots(state_lib):
    model = state_lib[3]["model"]
    ref = state_lib[3]["m21"][0]
    jitter = RootConfig(tuple(u + 0.01 for u in ref.u),
                        tuple(v - 0.01j for v in ref.v))
    st = solve_bethe(SolveRequest(model=model, a=2, b=1, seed_roots=jitter))
    assert states_equal(st.roots, ref.roots)


def test_solve_with_mode_numbers(state_lib):
    model = state_lib[3]["model"]
    ref = state_lib[3]["m10"][0]
    st = solve_bethe(SolveRequest(model=model, a=1, b=0,
                                  mode_numbers=ref.mode_numbers))
    assert st.mode_numbers == ref.mode_numbers
    assert st.residual <= 1e-12


def test_distinct_states_deduplicates_permutations(state_lib):
    model = state_lib[4]["model"]
    ref = state_lib[4]["m21"][0]
    swapped = RootConfig((ref.u[1], ref.u[0]), ref.v)
    assert states_equal(swapped, ref.roots)


def test_solve_request_validation():
    model = xxx_chain(2, (0.0, 0.0), 1.0)
    with pytest.raises(ValueError):
        SolveRequest(model=model, a=0, b=0)
    with pytest.raises(ValueError):
        SolveRequest(model=model, a=1, b=0, tol=-1.0)
    with pytest.raises(ValueError):
        SolveRequest(model=model, a=2, b=0, mode_numbers=(0,))


def test_continue_in_twist_identity_is_noop(state_lib):
    st = state_lib[3]["m10"][0]
    assert continue_in_twist(st, st.twist, steps=4) is st


def test_continue_in_twist_small_step_moves_roots(state_lib):
    st = state_lib[3]["m10"][0]
    delta = 1e-3
    moved = continue_in_twist(st, Twist(1.0 + delta, 1.0, 1.0), steps=2)
    shift = abs(moved.u[0] - st.u[0])
    assert 1e-5 * delta < shift < 100 * delta


def test_continue_in_twist_round_trip(state_lib):
    st = state_lib[3]["m21"][0]
    target = Twist(1.2 - 0.1j, 1.0, 0.8 + 0.15j)
    there = continue_in_twist(st, target, steps=6)
    assert np.max(np.abs(bethe_defect(there.roots, target, st.model))) < 1e-10
    back = continue_in_twist(there, Twist.identity(), steps=6)
    assert np.max(np.abs(back.roots.as_array() - st.roots.as_array())) < 1e-8
    assert back.mode_numbers == st.mode_numbers


def test_no_convergence_reported():
    model = xxx_chain(2, (0.0, 0.0), 1.0)
    with pytest.raises(NoConvergence):
        solve_bethe(SolveRequest(model=model, a=1, b=1, max_iter=20))
