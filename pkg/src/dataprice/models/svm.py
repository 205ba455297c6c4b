"""Support vector machines: SMO solver for classification and a proximal
solver for the epsilon-insensitive regression dual."""

from __future__ import annotations

import numpy as np

from .base import Model, ModelError, register


def kernel_matrix(A, B, kernel: str, gamma: float = 1.0) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if kernel == "linear":
        return A @ B.T
    if kernel == "rbf":
        sq = (np.sum(A ** 2, axis=1)[:, None] + np.sum(B ** 2, axis=1)[None, :]
              - 2.0 * (A @ B.T))
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise ModelError("unknown kernel %r (supported: linear, rbf)" % kernel)


class _KernelModel(Model):
    def __init__(self, support_vectors, coef, b, kernel, gamma, **kw):
        super().__init__(kw.pop("task"), **kw)
        self.support_vectors = np.atleast_2d(np.asarray(support_vectors, dtype=np.float64))
        self.coef = np.asarray(coef, dtype=np.float64)  # alpha_i*y_i or beta_i
        self.b = float(b)
        self.kernel = kernel
        self.gamma = float(gamma)

    def decision_function(self, X):
        X = self._check_input(X)
        K = kernel_matrix(X, self.support_vectors, self.kernel, self.gamma)
        return K @ self.coef + self.b

    def params_dict(self):
        return {"support_vectors": self.support_vectors.tolist(),
                "coef": self.coef.tolist(), "b": self.b,
                "kernel": self.kernel, "gamma": self.gamma}


@register
class SVMModel(_KernelModel):
    family = "svm"

    def __init__(self, support_vectors, coef, b, kernel, gamma, **kw):
        kw.setdefault("task", "classification")
        super().__init__(support_vectors, coef, b, kernel, gamma, **kw)

    def scores(self, X):
        return self.decision_function(X)

    def predict(self, X):
        return np.where(self.decision_function(X) >= 0, 1, -1).astype(np.int64)

    @classmethod
    def from_params(cls, task, hyperparams, manifest, seed, params):
        return cls(params["support_vectors"], params["coef"], params["b"],
                   params["kernel"], params["gamma"], hyperparams=hyperparams,
                   manifest=manifest, seed=seed)


@register
class SVRModel(_KernelModel):
    family = "svr"

    def __init__(self, support_vectors, coef, b, kernel, gamma, **kw):
        kw.setdefault("task", "regression")
        super().__init__(support_vectors, coef, b, kernel, gamma, **kw)

    def predict(self, X):
        return self.decision_function(X)

    @classmethod
    def from_params(cls, task, hyperparams, manifest, seed, params):
        return cls(params["support_vectors"], params["coef"], params["b"],
                   params["kernel"], params["gamma"], hyperparams=hyperparams,
                   manifest=manifest, seed=seed)


def dual_objective(alpha, y, K) -> float:
    """Soft-margin SVM dual value at the given multipliers."""
    ay = alpha * y
    return float(np.sum(alpha) - 0.5 * ay @ K @ ay)


def fit_svm(X, y, C: float = 1.0, kernel: str = "linear", gamma: float = 1.0,
            tol: float = 1e-3, max_passes: int = 200, seed: int = 0,
            manifest=None) -> SVMModel:
    """Platt-style SMO with an error cache; labels must be in {-1, +1}.

    Runs alternating full/non-bound examination passes until no multiplier
    moves, which leaves every point KKT-consistent within tol.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if set(np.unique(y)) - {-1.0, 1.0}:
        raise ModelError("labels must be -1/+1")
    if len(np.unique(y)) < 2:
        raise ModelError("both classes must be present")
    if C <= 0:
        raise ModelError("C must be positive")
    n = len(y)
    K = kernel_matrix(X, X, kernel, gamma)
    alpha = np.zeros(n)
    b = 0.0
    errors = -y.copy()  # f(x)=0 initially
    rng = np.random.default_rng(seed)

    def take_step(i1, i2):
        nonlocal b
        if i1 == i2:
            return False
        a1, a2 = alpha[i1], alpha[i2]
        y1, y2 = y[i1], y[i2]
        E1, E2 = errors[i1], errors[i2]
        s = y1 * y2
        if s > 0:
            L, H = max(0.0, a1 + a2 - C), min(C, a1 + a2)
        else:
            L, H = max(0.0, a2 - a1), min(C, C + a2 - a1)
        if L >= H:
            return False
        eta = K[i1, i1] + K[i2, i2] - 2.0 * K[i1, i2]
        if eta > 0:
            a2_new = a2 + y2 * (E1 - E2) / eta
            a2_new = min(max(a2_new, L), H)
        else:
            # objective is linear along the constraint; move to the better end
            f1 = y1 * (E1 + b) - a1 * K[i1, i1] - s * a2 * K[i1, i2]
            f2 = y2 * (E2 + b) - s * a1 * K[i1, i2] - a2 * K[i2, i2]
            L1 = a1 + s * (a2 - L)
            H1 = a1 + s * (a2 - H)
            obj_l = (L1 * f1 + L * f2 + 0.5 * L1 ** 2 * K[i1, i1]
                     + 0.5 * L ** 2 * K[i2, i2] + s * L * L1 * K[i1, i2])
            obj_h = (H1 * f1 + H * f2 + 0.5 * H1 ** 2 * K[i1, i1]
                     + 0.5 * H ** 2 * K[i2, i2] + s * H * H1 * K[i1, i2])
            if obj_l < obj_h - 1e-12:
                a2_new = L
            elif obj_l > obj_h + 1e-12:
                a2_new = H
            else:
                return False
        if abs(a2_new - a2) < 1e-12 * (a2_new + a2 + 1e-12):
            return False
        a1_new = a1 + s * (a2 - a2_new)
        b1 = b - E1 - y1 * (a1_new - a1) * K[i1, i1] - y2 * (a2_new - a2) * K[i1, i2]
        b2 = b - E2 - y1 * (a1_new - a1) * K[i1, i2] - y2 * (a2_new - a2) * K[i2, i2]
        if 0 < a1_new < C:
            b_new = b1
        elif 0 < a2_new < C:
            b_new = b2
        else:
            b_new = (b1 + b2) / 2.0
        errors[:] = errors + (y1 * (a1_new - a1) * K[i1]
                              + y2 * (a2_new - a2) * K[i2] + (b_new - b))
        alpha[i1], alpha[i2] = a1_new, a2_new
        b = b_new
        return True

    def examine(i2):
        y2, a2, E2 = y[i2], alpha[i2], errors[i2]
        r2 = E2 * y2
        if (r2 < -tol and a2 < C) or (r2 > tol and a2 > 0):
            non_bound = np.where((alpha > 0) & (alpha < C))[0]
            if len(non_bound) > 1:
                i1 = non_bound[np.argmax(np.abs(errors[non_bound] - E2))]
                if take_step(int(i1), i2):
                    return True
            if len(non_bound):
                start = rng.integers(len(non_bound))
                for k in range(len(non_bound)):
                    if take_step(int(non_bound[(start + k) % len(non_bound)]), i2):
                        return True
            start = rng.integers(n)
            for k in range(n):
                if take_step(int((start + k) % n), i2):
                    return True
        return False

    examine_all = True
    for _ in range(max_passes * 2):
        changed = 0
        if examine_all:
            for i in range(n):
                changed += examine(i)
        else:
            for i in np.where((alpha > 0) & (alpha < C))[0]:
                changed += examine(int(i))
        if examine_all:
            if changed == 0:
                break
            examine_all = False
        elif changed == 0:
            examine_all = True

    sv = alpha > 1e-12
    return SVMModel(X[sv], (alpha * y)[sv], b, kernel, gamma,
                    hyperparams={"C": C, "kernel": kernel, "gamma": gamma,
                                 "tol": tol},
                    manifest=manifest, seed=seed)


def epsilon_loss(z, epsilon: float):
    z = np.abs(np.asarray(z, dtype=np.float64))
    return np.maximum(z - epsilon, 0.0)


def fit_svr(X, y, C: float = 1.0, epsilon: float = 0.1, kernel: str = "linear",
            gamma: float = 1.0, tol: float = 1e-6, max_iter: int = 5000,
            manifest=None) -> SVRModel:
    """Epsilon-insensitive regression solved on the paired-multiplier dual
    in the collapsed variables beta_i = alpha_i - alpha_i*:

        max  -1/2 beta' K beta - eps * sum|beta| + y' beta
        s.t. sum(beta) = 0,  -C <= beta_i <= C

    by accelerated proximal gradient; the prox handles the l1 term, the box
    and the sum constraint jointly (bisection on the constraint multiplier).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if C <= 0:
        raise ModelError("C must be positive")
    if epsilon < 0:
        raise ModelError("epsilon must be >= 0")
    n = len(y)
    K = kernel_matrix(X, X, kernel, gamma)
    L = float(np.linalg.eigvalsh(K)[-1]) + 1e-12

    def prox(z, step):
        # argmin_b 1/2||b - z||^2 + step*eps*||b||_1  over box and sum(b)=0
        thr = step * epsilon

        def solve(nu):
            s = z - nu
            b = np.sign(s) * np.maximum(np.abs(s) - thr, 0.0)
            return np.clip(b, -C, C)

        lo, hi = z.min() - thr - C - 1.0, z.max() + thr + C + 1.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if solve(mid).sum() > 0:
                lo = mid
            else:
                hi = mid
        return solve(0.5 * (lo + hi))

    beta = np.zeros(n)
    z = beta.copy()
    t_prev = 1.0
    step = 1.0 / L
    for _ in range(max_iter):
        grad = K @ z - y  # gradient of the smooth part (negated objective)
        beta_new = prox(z - step * grad, step)
        t = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_prev ** 2))
        z = beta_new + ((t_prev - 1.0) / t) * (beta_new - beta)
        if np.max(np.abs(beta_new - beta)) < tol:
            beta = beta_new
            break
        beta, t_prev = beta_new, t

    f_raw = K @ beta
    free = (np.abs(beta) > 1e-8) & (np.abs(beta) < C - 1e-8)
    if free.any():
        b = float(np.mean(y[free] - f_raw[free] - epsilon * np.sign(beta[free])))
    else:
        b = float(np.mean(y - f_raw))
    sv = np.abs(beta) > 1e-10
    if not sv.any():
        sv = np.array([0])
    return SVRModel(X[sv], beta[sv], b, kernel, gamma,
                    hyperparams={"C": C, "epsilon": epsilon, "kernel": kernel,
                                 "gamma": gamma, "tol": tol},
                    manifest=manifest)
