import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from resonance_tracer.model import (
    BUNDLED_MODELS,
    LAMBDA,
    CubicSpring,
    HarmonicExcitation,
    Model,
    ModelError,
    build_proportional_damping,
    eval_element_force,
    eval_element_jacobian,
    load_model,
    model_from_dict,
    natural_frequencies,
    resolve_model,
    twodof_model,
)

K2 = np.array([[2.0, -1.0], [-1.0, 2.0]])
finite = st.floats(-10, 10, allow_nan=False)


class TestProportionalDamping:
    def test_benchmark_values(self):
        C = build_proportional_damping(K2, 0.01, 1.0)
        np.testing.assert_allclose(C, [[0.04, -0.02], [-0.02, 0.04]], rtol=1e-15)

    def test_undamped(self):
        assert not build_proportional_damping(K2, 0.0, 1.0).any()

    def test_identity_scaling(self):
        np.testing.assert_allclose(build_proportional_damping(np.eye(3), 0.05, 2.0),
                                   0.05 * np.eye(3))

    @pytest.mark.parametrize("omega1", [0.0, -1.0])
    def test_rejects_nonpositive_frequency(self, omega1):
        with pytest.raises(ValueError):
            build_proportional_damping(K2, 0.01, omega1)

    def test_first_mode_gets_requested_ratio(self):
        from resonance_tracer.resonance import modal_damping_ratio

        m = twodof_model(D1=0.03)
        assert modal_damping_ratio(m, 1) == pytest.approx(0.03, rel=1e-12)


class TestNaturalFrequencies:
    def test_two_dof_closed_form(self):
        np.testing.assert_allclose(natural_frequencies(np.eye(2), K2), [1.0, np.sqrt(3.0)],
                                   rtol=1e-14)

    def test_identity_pair(self):
        np.testing.assert_allclose(natural_frequencies(np.eye(2), np.eye(2)), [1.0, 1.0])

    def test_single_dof(self):
        np.testing.assert_allclose(natural_frequencies(4.0 * np.eye(1), np.eye(1)), [0.5])

    def test_singular_mass_fails(self):
        with pytest.raises(np.linalg.LinAlgError):
            natural_frequencies(np.diag([1.0, 0.0]), K2)

    @given(st.floats(1e-3, 1e3))
    def test_joint_scaling_invariance(self, alpha):
        M = np.array([[2.0, 0.3], [0.3, 1.0]])
        ref = natural_frequencies(M, K2)
        np.testing.assert_allclose(natural_frequencies(alpha * M, alpha * K2), ref, rtol=1e-12)


class TestCubicSpring:
    def test_force_example(self):
        np.testing.assert_allclose(
            eval_element_force(CubicSpring(2, LAMBDA), [5.0, 0.5], [0.0, 0.0], 2.0), [0.0, 0.25])

    def test_zero_state(self):
        assert not eval_element_force(CubicSpring(1, 3.0), [0.0, 0.0], [0.0, 0.0], 1.0).any()

    def test_odd_example(self):
        np.testing.assert_allclose(eval_element_force(CubicSpring(1, 1.0), [-1.0], [0.0], 0.0),
                                   [-1.0])

    def test_jacobian_example(self):
        dq, dv = eval_element_jacobian(CubicSpring(2, 2.0), [5.0, 0.5], [0.0, 0.0], 0.0)
        assert dq[1, 1] == pytest.approx(1.5)
        assert np.count_nonzero(dq) == 1
        assert not dv.any()

    def test_jacobian_zero_state(self):
        dq, dv = eval_element_jacobian(CubicSpring(1, 1.0), [0.0, 0.0], [0.0, 0.0], 0.0)
        assert not dq.any() and not dv.any()

    def test_jacobian_against_central_differences(self):
        el = CubicSpring(2, 1.3)
        q = np.array([0.3, -0.7])
        dq, _ = eval_element_jacobian(el, q, np.zeros(2), 0.0)
        h = 1e-6
        fd = np.column_stack([
            (eval_element_force(el, q + h * e, np.zeros(2), 0.0)
             - eval_element_force(el, q - h * e, np.zeros(2), 0.0)) / (2 * h)
            for e in np.eye(2)])
        np.testing.assert_allclose(dq, fd, rtol=1e-8, atol=1e-12)

    def test_stacked_states(self):
        q = np.array([[1.0, 2.0], [-1.0, 0.5], [0.0, 3.0]])
        f = eval_element_force(CubicSpring(2, 2.0), q, np.zeros_like(q), 0.0)
        np.testing.assert_allclose(f[:, 1], 2.0 * q[:, 1] ** 3)
        assert not f[:, 0].any()

    @given(arrays(float, 2, elements=finite), st.floats(-5, 5), st.integers(1, 2))
    def test_zero_at_origin_for_any_lambda(self, qdot, lam, k):
        f = eval_element_force(CubicSpring(k, LAMBDA), np.zeros(2), qdot, lam)
        assert not f.any()

    @given(arrays(float, 3, elements=finite), st.floats(-5, 5), st.integers(1, 3))
    def test_odd_symmetry(self, q, k_nl, k):
        el = CubicSpring(k, k_nl)
        z = np.zeros(3)
        np.testing.assert_allclose(eval_element_force(el, -q, z, 0.0),
                                   -eval_element_force(el, q, z, 0.0))

    @given(arrays(float, 2, elements=st.floats(-3, 3)), st.floats(0.1, 3))
    def test_jacobian_matches_fd_random(self, q, k_nl):
        el = CubicSpring(1, k_nl)
        dq, _ = eval_element_jacobian(el, q, np.zeros(2), 0.0)
        h = 1e-6
        for j, e in enumerate(np.eye(2)):
            col = (eval_element_force(el, q + h * e, np.zeros(2), 0.0)
                   - eval_element_force(el, q - h * e, np.zeros(2), 0.0)) / (2 * h)
            np.testing.assert_allclose(dq[:, j], col, rtol=1e-6, atol=1e-9)


class TestModelValidation:
    def _exc(self, n=2):
        return HarmonicExcitation((1.0,) * n, (0.0,) * n)

    def test_rejects_nonsymmetric_mass(self):
        with pytest.raises(ModelError):
            Model(np.array([[1.0, 0.1], [0.0, 1.0]]), np.zeros((2, 2)), K2, self._exc())

    def test_rejects_indefinite_mass(self):
        with pytest.raises(ModelError):
            Model(np.diag([1.0, -1.0]), np.zeros((2, 2)), K2, self._exc())

    def test_rejects_negative_stiffness(self):
        with pytest.raises(ModelError):
            Model(np.eye(2), np.zeros((2, 2)), -K2, self._exc())

    def test_rejects_element_out_of_range(self):
        with pytest.raises(ModelError):
            Model(np.eye(2), np.zeros((2, 2)), K2, self._exc(), (CubicSpring(3, 1.0),))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ModelError):
            Model(np.eye(2), np.zeros((3, 3)), K2, self._exc())

    def test_matrices_are_read_only(self, model_m1):
        with pytest.raises(ValueError):
            model_m1.stiffness[0, 0] = 5.0

    def test_lambda_bound_excitation(self):
        m = Model(np.eye(1), np.zeros((1, 1)), np.eye(1), HarmonicExcitation((LAMBDA,), (0.0,)))
        fc, fs = m.excitation_vectors(0.7)
        assert fc[0] == 0.7 and fs[0] == 0.0


class TestModelFiles:
    def test_bundled_models_load(self):
        for name in BUNDLED_MODELS:
            assert resolve_model(name).ndof >= 1

    @pytest.mark.parametrize("name,force_on", [("twodof_m1", 1), ("twodof_m2", 2)])
    def test_bundled_benchmark_matches_builder(self, name, force_on):
        a, b = resolve_model(name), twodof_model(force_on)
        np.testing.assert_allclose(a.damping, b.damping, rtol=1e-15)
        np.testing.assert_array_equal(a.stiffness, b.stiffness)
        assert a.elements == b.elements
        assert a.excitation == b.excitation

    def test_round_trip_through_file(self, tmp_path):
        doc = {"ndof": 1, "mass": [[2.0]], "stiffness": [[8.0]], "damping": [[0.1]],
               "elements": [{"kind": "cubic", "coordinate": 1, "k_nl": 0.5}],
               "excitation": {"cosine": [1.0], "sine": [0.0]}}
        path = tmp_path / "m.json"
        path.write_text(json.dumps(doc))
        m = load_model(path)
        assert m.elements[0].k_nl == 0.5
        assert natural_frequencies(m.mass, m.stiffness)[0] == pytest.approx(2.0)

    @pytest.mark.parametrize("patch", [
        {"bogus": 1},
        {"ndof": 0},
        {"mass": [[1.0, 0.0]]},
        {"elements": [{"kind": "quintic", "coordinate": 1}]},
        {"elements": [{"kind": "cubic", "coordinate": 1, "k_nl": "mu"}]},
        {"elements": [{"kind": "cubic", "coordinate": 1, "extra": 2}]},
        {"damping": {"proportional": {"D1": 0.01, "mode": 1, "x": 0}}},
        {"excitation": {"cosine": [1.0], "phase": [0.0]}},
    ])
    def test_schema_violations(self, patch):
        doc = {"ndof": 1, "mass": [[1.0]], "stiffness": [[1.0]],
               "excitation": {"cosine": [1.0]}}
        doc.update(patch)
        with pytest.raises(ModelError):
            model_from_dict(doc)

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(ModelError):
            load_model(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            resolve_model(tmp_path / "absent.json")
