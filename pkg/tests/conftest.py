import pytest
from hypothesis import strategies as st

from hvsis.model import ControlInputs, ModelParams

# Fig. 2 (a) and (b): common gamma=.4, beta_h=beta_v=omega=.2
FIG2A = dict(gamma=0.4, beta_h=0.2, beta_v=0.2, omega=0.2, mu=0.2)
FIG2B = dict(gamma=0.4, beta_h=0.2, beta_v=0.2, omega=0.2, mu=0.1)
# Fig. 5 (a)
FIG5A = dict(gamma=0.4, beta_h=0.4, beta_v=0.1, omega=0.2, mu=0.1)


@pytest.fixture
def below():
    return ModelParams(**FIG2A)


@pytest.fixture
def above():
    return ModelParams(**FIG2B)


@pytest.fixture
def fig5a():
    return ModelParams(**FIG5A)


rate = st.floats(min_value=0.05, max_value=1.0, allow_nan=False)


@st.composite
def params(draw, beta_v_zero=False):
    return ModelParams(draw(rate), draw(rate), 0.0 if beta_v_zero else draw(rate), draw(rate),
                       draw(rate))


@st.composite
def params_and_controls(draw):
    p = draw(params())
    u1 = draw(st.floats(min_value=0.0, max_value=0.5))
    u2 = draw(st.floats(min_value=0.0, max_value=1.0)) * p.beta_h
    return p, ControlInputs(u1, u2)
