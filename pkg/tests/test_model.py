import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from narain_os.errors import BadModelFile
from narain_os.model import ii11_model, load_model, model_from_matrices, parse_model_text


def test_frames_r1(m1):
    s = 1 / np.sqrt(2)
    np.testing.assert_allclose(m1.left_basis, [[s, s]], atol=1e-12)
    np.testing.assert_allclose(m1.right_basis, [[s, -s]], atol=1e-12)
    np.testing.assert_allclose(m1.metric, np.eye(2), atol=1e-12)
    assert m1.central_charge == 1


@given(st.floats(0.4, 3.0))
def test_frames_pseudo_orthonormal(R):
    m = ii11_model(R)
    for B, s in ((m.left_basis, m.left_signs), (m.right_basis, m.right_signs)):
        np.testing.assert_allclose(B @ m.metric @ B.T, np.diag(s), atol=1e-10)
    np.testing.assert_allclose(m.polarization.P @ m.left_basis.T, m.left_basis.T, atol=1e-10)
    np.testing.assert_allclose(m.polarization.P @ m.right_basis.T, 0, atol=1e-10)


def test_indefinite_frames(m_indef):
    assert not m_indef.positive
    assert list(m_indef.left_signs) == [-1.0]
    assert list(m_indef.right_signs) == [-1.0]


def test_rank4(m4):
    assert m4.rank == 4 and m4.n_left == 2 and m4.n_right == 2
    assert m4.positive


def test_parse_boost():
    m = parse_model_text("gram = 0 1; 1 0\nboost_R = 1.3  # radius\n")
    ref = ii11_model(1.3)
    np.testing.assert_allclose(m.polarization.P, ref.polarization.P)


def test_parse_flat_matrix():
    m = parse_model_text("gram = 0 1 1 0\npolarization_matrix = 0.5 0.5 0.5 0.5\n")
    np.testing.assert_allclose(m.polarization.P, ii11_model(1.0).polarization.P, atol=1e-12)


@pytest.mark.parametrize("text, msg", [
    ("gram = 1 0; 0 1\nboost_R = 1\n", "NotEven"),
    ("gram = 0 1; 1 0\n", "boost_R"),
    ("gram = 0 1; 1 0\nboost_R = 1\nfoo = 2\n", "unknown key"),
    ("gram = 0 1; 1 0\nboost_R = 1\nboost_R = 2\n", "duplicate"),
    ("gram = 0 1; 1 0\nboost_R = -1\n", "NonPositiveR"),
    ("gram = 0 1 1\nboost_R = 1\n", "square"),
    ("gram = 0 1; 1 0\npolarization_matrix = 1 0; 0 0.5\n", "InvalidPolarization"),
    ("just text\n", "key = value"),
])
def test_bad_model_files(text, msg):
    with pytest.raises(BadModelFile, match=msg):
        parse_model_text(text)


def test_load_model_name_from_stem(tmp_path):
    f = tmp_path / "mine.model"
    f.write_text("gram = 0 1; 1 0\nboost_R = 1.1\n")
    assert load_model(f).name == "mine"
    with pytest.raises(BadModelFile):
        load_model(tmp_path / "missing.model")


def test_model_from_matrices():
    m = model_from_matrices([[0, 1], [1, 0]], [[0.5, 0.5], [0.5, 0.5]])
    assert m.sector_weight((1, 0)) == pytest.approx((0.25, 0.25))


@pytest.mark.parametrize("path", ["models/ii11_R1.3.model", "models/ii11_R1.model", "models/ii11_sqrt2.model",
                                  "models/ii11_indefinite.model"])
def test_bundled_models_parse(path):
    import pathlib

    m = load_model(pathlib.Path(__file__).parent.parent / path)
    assert m.rank == 2
