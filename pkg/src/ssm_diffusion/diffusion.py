"""DDPM machinery: linear noise schedule, forward noising, per-step loss
weights, and conditional reverse-process sampling.

Diffusion steps are 1-indexed (i in [1, K]); internal arrays are 0-based.
The denoiser is an MLP that takes [x_i | state | action | step embedding |
horizon] concatenated and predicts the noise that was added.
"""

from dataclasses import dataclass, field

import numpy as np

from .approximator import mlp_forward
from .errors import ConfigurationError, NumericError, ShapeError


@dataclass
class NoiseSchedule:
    K: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    sigma: np.ndarray       # reverse-step noise scale (see sigma_mode)
    eta: np.ndarray         # per-step loss weight for the stored eta_mode
    eta_mode: str = "simple"
    sigma_mode: str = "beta"


@dataclass
class Conditioning:
    """Context vectors the denoiser is conditioned on. Any field may be an
    empty array (unconditional sampling uses only the step embedding)."""
    state_enc: np.ndarray = field(default_factory=lambda: np.zeros(0))
    action_enc: np.ndarray = field(default_factory=lambda: np.zeros(0))
    horizon_enc: np.ndarray = field(default_factory=lambda: np.zeros(0))
    step_dim: int = 8


def make_schedule(K, beta_min, beta_max, spacing="linear", eta_mode="simple",
                  sigma_mode="beta"):
    if K < 1:
        raise ConfigurationError(f"K must be >= 1, got {K}")
    if not (0.0 < beta_min <= beta_max < 1.0):
        raise ConfigurationError(
            f"need 0 < beta_min <= beta_max < 1, got ({beta_min}, {beta_max})")
    if spacing != "linear":
        raise ConfigurationError(f"unknown spacing {spacing!r}")
    if eta_mode not in ("simple", "paper"):
        raise ConfigurationError(f"unknown eta_mode {eta_mode!r}")
    if sigma_mode not in ("posterior", "beta"):
        raise ConfigurationError(f"unknown sigma_mode {sigma_mode!r}")
    beta = np.linspace(beta_min, beta_max, K)
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    if sigma_mode == "beta":
        sigma = np.sqrt(beta)
    else:
        # true posterior variance beta_tilde_i = (1-abar_{i-1})/(1-abar_i) b_i;
        # sigma_1 = 0 (no noise is added at the final reverse step anyway)
        alpha_bar_prev = np.concatenate([[1.0], alpha_bar[:-1]])
        sigma = np.sqrt((1.0 - alpha_bar_prev) / (1.0 - alpha_bar) * beta)
    if eta_mode == "simple":
        eta = np.ones(K)
    else:
        # guard sigma_1 = 0 in posterior mode: fall back to beta_1 there
        var = np.where(sigma ** 2 > 0, sigma ** 2, beta)
        eta = (beta ** 2 / (2.0 * var)) * alpha * (1.0 - alpha_bar)
    return NoiseSchedule(K=K, beta=beta, alpha=alpha, alpha_bar=alpha_bar,
                         sigma=sigma, eta=eta, eta_mode=eta_mode,
                         sigma_mode=sigma_mode)


def _check_step(sched, i):
    if not 1 <= i <= sched.K:
        raise IndexError(f"diffusion step {i} out of range [1, {sched.K}]")


def forward_noise(sched, x0, i, epsilon):
    """x_i = sqrt(abar_i) x0 + sqrt(1 - abar_i) epsilon. Works on a vector
    or a batch of row vectors (epsilon must match x0's shape)."""
    _check_step(sched, i)
    x0 = np.asarray(x0, dtype=float)
    epsilon = np.asarray(epsilon, dtype=float)
    if x0.shape != epsilon.shape:
        raise ShapeError(f"x0 shape {x0.shape} != epsilon shape {epsilon.shape}")
    ab = sched.alpha_bar[i - 1]
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * epsilon


def loss_weight(sched, i, mode="simple"):
    """Per-step weight on the squared noise-prediction error."""
    _check_step(sched, i)
    if mode == "simple":
        return 1.0
    if mode == "paper":
        beta = sched.beta[i - 1]
        sig2 = sched.sigma[i - 1] ** 2
        if sig2 == 0.0:
            sig2 = beta
        return (beta ** 2 / (2.0 * sig2)) * sched.alpha[i - 1] * (
            1.0 - sched.alpha_bar[i - 1])
    raise ConfigurationError(f"unknown eta mode {mode!r}")


def sinusoidal_embedding(i, dim):
    """Standard sin/cos positional embedding of the (1-based) step index."""
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / max(half - 1, 1))
    angles = i * freqs
    emb = np.concatenate([np.sin(angles), np.cos(angles)])
    if emb.size < dim:
        emb = np.concatenate([emb, np.zeros(dim - emb.size)])
    return emb


def net_input(x_i, cond, i):
    """Concatenate noised point and conditioning into the denoiser input.
    x_i may be a vector or a (batch, dim) matrix."""
    x_i = np.asarray(x_i, dtype=float)
    ctx = np.concatenate([cond.state_enc, cond.action_enc,
                          sinusoidal_embedding(i, cond.step_dim),
                          cond.horizon_enc])
    if x_i.ndim == 1:
        return np.concatenate([x_i, ctx])
    return np.hstack([x_i, np.broadcast_to(ctx, (x_i.shape[0], ctx.size))])


def reverse_step(sched, net, x_i, i, cond, z):
    """One reverse-process step x_i -> x_{i-1} with the standard
    posterior-mean update; no noise is added at i=1."""
    _check_step(sched, i)
    x_i = np.asarray(x_i, dtype=float)
    z = np.asarray(z, dtype=float)
    if i > 1 and z.shape != x_i.shape:
        raise ShapeError(f"z shape {z.shape} != x shape {x_i.shape}")
    eps_pred, _ = mlp_forward(net, net_input(x_i, cond, i))
    beta = sched.beta[i - 1]
    ab = sched.alpha_bar[i - 1]
    mean = (x_i - (beta / np.sqrt(1.0 - ab)) * eps_pred) / np.sqrt(sched.alpha[i - 1])
    if i == 1:
        return mean
    return mean + sched.sigma[i - 1] * z


def sample(sched, net, cond, count, rng, dim=None):
    """Draw `count` x0 vectors by running the reverse chain from unit
    Gaussian noise. Deterministic given the rng state."""
    if count < 1:
        raise ConfigurationError(f"count must be >= 1, got {count}")
    if dim is None:
        dim = net.layer_sizes[-1]
    x = rng.standard_normal((count, dim))
    for i in range(sched.K, 0, -1):
        z = rng.standard_normal((count, dim)) if i > 1 else np.zeros((count, dim))
        x = reverse_step(sched, net, x, i, cond, z)
        if not np.all(np.isfinite(x)):
            raise NumericError(f"non-finite sample values at reverse step {i}")
    return x
