"""Gaussian-process surrogate with an ARD squared-exponential kernel.

Exact inference through a cached Cholesky factorization; hyperparameters are
selected by multi-start coordinate ascent of the log marginal likelihood over
a log-grid that is refined twice (derivative-free and deterministic, which is
plenty at a few dozen training points).  Inputs are standardized per
dimension and targets centered on their mean before any kernel math.
"""

from dataclasses import dataclass

import numpy as np

NOISE_FLOOR = 1e-6
MAX_JITTER = 1e-2


@dataclass(frozen=True)
class AcquisitionConfig:
    """Upper-confidence-bound weight; 0 means pure exploitation."""

    beta: float = 0.1

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")


@dataclass(frozen=True)
class GpModel:
    """Immutable fitted surrogate.

    x_mean/x_std hold the input standardization; chol and alpha cache the
    factorization of K + noise*I on the standardized inputs, with targets
    centered by prior_mean.
    """

    train_x: np.ndarray  # raw inputs, (n, d)
    train_y: np.ndarray  # raw targets, (n,)
    x_mean: np.ndarray
    x_std: np.ndarray
    signal_variance: float
    length_scales: np.ndarray  # (d,), in standardized units
    noise_variance: float
    prior_mean: float
    chol: np.ndarray
    alpha: np.ndarray
    log_marginal_likelihood: float

    @property
    def n_train(self):
        return len(self.train_y)

    @property
    def dim(self):
        return self.train_x.shape[1] if self.train_x.ndim == 2 else len(self.x_mean)


def kernel(w1, w2, signal_variance, length_scales):
    """ARD squared exponential: sv * exp(-0.5 * sum(((w1-w2)/l)^2))."""
    w1 = np.asarray(w1, float)
    w2 = np.asarray(w2, float)
    length_scales = np.asarray(length_scales, float)
    if w1.shape != w2.shape or w1.shape[-1] != length_scales.shape[-1]:
        raise ValueError("dimension mismatch between inputs and length scales")
    d = (w1 - w2) / length_scales
    return signal_variance * np.exp(-0.5 * np.sum(d * d, axis=-1))


def _kernel_matrix(a, b, signal_variance, length_scales):
    sa = a / length_scales
    sb = b / length_scales
    sq = (
        np.sum(sa * sa, axis=1)[:, None]
        + np.sum(sb * sb, axis=1)[None, :]
        - 2.0 * sa @ sb.T
    )
    return signal_variance * np.exp(-0.5 * np.maximum(sq, 0.0))


def _try_factorize(xs, y_centered, sv, ls, nv):
    """Cholesky with jitter escalation; returns (chol, alpha, lml, nv) or None."""
    n = len(xs)
    k = _kernel_matrix(xs, xs, sv, ls)
    jitter = max(nv, NOISE_FLOOR)
    while jitter <= MAX_JITTER:
        try:
            chol = np.linalg.cholesky(k + jitter * np.eye(n))
        except np.linalg.LinAlgError:
            jitter *= 10.0
            continue
        alpha = np.linalg.solve(chol.T, np.linalg.solve(chol, y_centered))
        lml = (
            -0.5 * float(y_centered @ alpha)
            - float(np.sum(np.log(np.diag(chol))))
            - 0.5 * n * np.log(2.0 * np.pi)
        )
        return chol, alpha, lml, jitter
    return None


def _lml_of(xs, y_centered, log_params):
    d = xs.shape[1]
    sv = np.exp(log_params[0])
    ls = np.exp(log_params[1 : 1 + d])
    nv = np.exp(log_params[1 + d])
    result = _try_factorize(xs, y_centered, sv, ls, nv)
    return -np.inf if result is None else result[2]


def _optimize_hyperparams(xs, y_centered):
    """Coordinate ascent on log(sv), log(l), log(nv): grid refined twice."""
    d = xs.shape[1]
    var_y = max(float(np.var(y_centered)), 1e-8)
    starts = []
    for l0 in (1.0, 3.0):
        theta = np.concatenate(
            [[np.log(var_y)], np.full(d, np.log(l0)), [np.log(1e-4 * var_y + NOISE_FLOOR)]]
        )
        starts.append(theta)

    best_theta, best_lml = None, -np.inf
    for theta in starts:
        theta = theta.copy()
        cur = _lml_of(xs, y_centered, theta)
        for scale in (1.0, 0.5, 0.25):
            offsets = scale * np.array([-2.0, -1.0, 1.0, 2.0])
            for i in range(len(theta)):
                base = theta[i]
                for off in offsets:
                    trial = theta.copy()
                    trial[i] = base + off
                    if i == 1 + d:  # keep noise within its floor/ceiling
                        trial[i] = np.clip(
                            trial[i], np.log(NOISE_FLOOR), np.log(MAX_JITTER)
                        )
                    val = _lml_of(xs, y_centered, trial)
                    if val > cur:
                        cur = val
                        theta = trial
        if cur > best_lml:
            best_lml, best_theta = cur, theta
    sv = float(np.exp(best_theta[0]))
    ls = np.exp(best_theta[1 : 1 + d])
    nv = float(np.exp(best_theta[1 + d]))
    return sv, ls, nv


def fit(
    train_x,
    train_y,
    optimize_hyperparams=True,
    signal_variance=1.0,
    length_scales=None,
    noise_variance=NOISE_FLOOR,
):
    """Fit the surrogate; with no data the result is the prior.

    When optimize_hyperparams is False the supplied (or default)
    hyperparameters are used as-is, which the optimization loop exploits to
    refit cheaply between hyperparameter updates.
    """
    x = np.atleast_2d(np.asarray(train_x, float))
    y = np.asarray(train_y, float).ravel()
    if len(y) == 0:
        d = x.shape[1] if x.ndim == 2 and x.shape[1] > 0 else 1
        return GpModel(
            train_x=np.zeros((0, d)),
            train_y=y,
            x_mean=np.zeros(d),
            x_std=np.ones(d),
            signal_variance=signal_variance,
            length_scales=np.ones(d) if length_scales is None else np.asarray(length_scales),
            noise_variance=noise_variance,
            prior_mean=0.0,
            chol=np.zeros((0, 0)),
            alpha=np.zeros(0),
            log_marginal_likelihood=0.0,
        )
    if x.shape[0] != len(y):
        raise ValueError("train_x and train_y lengths differ")

    x_mean = x.mean(axis=0)
    x_std = x.std(axis=0)
    x_std = np.where(x_std < 1e-12, 1.0, x_std)
    xs = (x - x_mean) / x_std
    m0 = float(y.mean())
    yc = y - m0

    if optimize_hyperparams:
        sv, ls, nv = _optimize_hyperparams(xs, yc)
    else:
        sv = signal_variance
        ls = np.ones(x.shape[1]) if length_scales is None else np.asarray(length_scales, float)
        nv = noise_variance

    result = _try_factorize(xs, yc, sv, ls, nv)
    if result is None:
        raise np.linalg.LinAlgError(
            "kernel matrix not positive definite even at maximum jitter; "
            "check for duplicate inputs with conflicting targets"
        )
    chol, alpha, lml, nv = result
    return GpModel(
        train_x=x,
        train_y=y,
        x_mean=x_mean,
        x_std=x_std,
        signal_variance=sv,
        length_scales=np.asarray(ls, float),
        noise_variance=nv,
        prior_mean=m0,
        chol=chol,
        alpha=alpha,
        log_marginal_likelihood=lml,
    )


def posterior(model, w):
    """Predictive mean and standard deviation of the latent function.

    Accepts a single input (d,) or a batch (n, d); returns scalars or arrays
    to match.
    """
    w = np.asarray(w, float)
    single = w.ndim == 1
    wb = np.atleast_2d(w)
    if wb.shape[1] != model.dim:
        raise ValueError("query dimension does not match training dimension")
    if model.n_train == 0:
        mean = np.full(len(wb), model.prior_mean)
        std = np.full(len(wb), np.sqrt(model.signal_variance))
        return (float(mean[0]), float(std[0])) if single else (mean, std)
    ws = (wb - model.x_mean) / model.x_std
    xs = (model.train_x - model.x_mean) / model.x_std
    ks = _kernel_matrix(xs, ws, model.signal_variance, model.length_scales)  # (n, m)
    mean = model.prior_mean + ks.T @ model.alpha
    v = np.linalg.solve(model.chol, ks)
    var = model.signal_variance - np.sum(v * v, axis=0)
    std = np.sqrt(np.maximum(var, 0.0))
    return (float(mean[0]), float(std[0])) if single else (mean, std)


def ucb(model, w, cfg=AcquisitionConfig()):
    """Upper confidence bound: posterior mean + beta * posterior std."""
    mean, std = posterior(model, w)
    return mean + cfg.beta * std
