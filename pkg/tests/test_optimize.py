import numpy as np

from fluxsim.optimize import conjugate_gradient


def test_quadratic(rng):
    a = rng.normal(size=(6, 6))
    a = a @ a.T + 6 * np.eye(6)
    b = rng.normal(size=6)
    res = conjugate_gradient(lambda x: 0.5 * x @ a @ x - b @ x, lambda x: a @ x - b,
                             np.zeros(6), gtol=1e-10)
    assert res.converged
    assert np.allclose(res.x, np.linalg.solve(a, b), atol=1e-9)


def test_rosenbrock():
    def f(x):
        return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2

    def g(x):
        return np.array([-2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] ** 2),
                         200 * (x[1] - x[0] ** 2)])

    res = conjugate_gradient(f, g, np.array([-1.2, 1.0]), gtol=1e-8)
    assert res.converged
    assert np.allclose(res.x, [1.0, 1.0], atol=1e-6)


def test_already_converged():
    res = conjugate_gradient(lambda x: x @ x, lambda x: 2 * x, np.zeros(3))
    assert res.converged and res.n_iter == 0


def test_maxiter_reported():
    res = conjugate_gradient(lambda x: np.sum(np.cosh(x)), np.sinh, np.full(4, 3.0),
                             gtol=1e-300, maxiter=3)
    assert not res.converged
    assert res.n_iter <= 3
