"""Dense ReLU networks with exact reverse-mode gradients, Adam, and
finite-difference gradient checking.

The network family is fixed: a trunk of affine+ReLU layers whose last
activation feeds one or more affine heads. Output vectors are the heads
concatenated in declaration order. Everything is float64.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np


class ArchitectureError(ValueError):
    pass


class NonFiniteGradientError(FloatingPointError):
    pass


@dataclass(frozen=True)
class Architecture:
    input_width: int
    hidden: tuple[int, ...] = (64, 32)
    heads: tuple[tuple[str, int], ...] = (("outcome", 2), ("indicator", 36))
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "heads", tuple((str(n), int(w)) for n, w in self.heads))
        if self.input_width < 1:
            raise ArchitectureError("input width must be >= 1")
        if any(h < 1 for h in self.hidden):
            raise ArchitectureError(f"hidden widths must be >= 1, got {self.hidden}")
        if not self.heads or any(w < 1 for _, w in self.heads):
            raise ArchitectureError("need at least one head of width >= 1")
        if self.activation != "relu":
            raise ArchitectureError(f"unsupported activation {self.activation!r}")

    @property
    def output_width(self) -> int:
        return sum(w for _, w in self.heads)

    @property
    def feature_width(self) -> int:
        return self.hidden[-1] if self.hidden else self.input_width

    def head_slice(self, name: str) -> slice:
        start = 0
        for n, w in self.heads:
            if n == name:
                return slice(start, start + w)
            start += w
        raise KeyError(name)

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        shapes = {}
        widths = (self.input_width,) + self.hidden
        for i in range(len(self.hidden)):
            shapes[f"trunk.{i}.weight"] = (widths[i], widths[i + 1])
            shapes[f"trunk.{i}.bias"] = (widths[i + 1],)
        for name, w in self.heads:
            shapes[f"head.{name}.weight"] = (self.feature_width, w)
            shapes[f"head.{name}.bias"] = (w,)
        return shapes

    def to_dict(self) -> dict:
        return {
            "input_width": self.input_width,
            "hidden": list(self.hidden),
            "heads": [[n, w] for n, w in self.heads],
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Architecture":
        return cls(
            input_width=int(d["input_width"]),
            hidden=tuple(d["hidden"]),
            heads=tuple((n, w) for n, w in d["heads"]),
            activation=d.get("activation", "relu"),
        )


class ParamSet(Mapping[str, np.ndarray]):
    """Named float64 tensors iterated in sorted-name order."""

    def __init__(self, tensors: Mapping[str, np.ndarray]):
        self._t = {k: np.asarray(tensors[k], dtype=float) for k in sorted(tensors)}

    def __getitem__(self, name: str) -> np.ndarray:
        return self._t[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._t)

    def __len__(self) -> int:
        return len(self._t)

    def replace(self, **updates: np.ndarray) -> "ParamSet":
        out = dict(self._t)
        for k, v in updates.items():
            if k not in out:
                raise KeyError(k)
            v = np.asarray(v, dtype=float)
            if v.shape != out[k].shape:
                raise ArchitectureError(f"shape of {k!r} is fixed at {out[k].shape}")
            out[k] = v
        return ParamSet(out)

    def merged(self, other: Mapping[str, np.ndarray]) -> "ParamSet":
        out = dict(self._t)
        out.update(other)
        return ParamSet(out)

    def copy(self) -> "ParamSet":
        return ParamSet({k: v.copy() for k, v in self._t.items()})

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self._t.values())

    def size(self) -> int:
        return sum(v.size for v in self._t.values())

    def to_dict(self) -> dict:
        return {k: {"shape": list(v.shape), "data": [float(x) for x in v.reshape(-1)]} for k, v in self._t.items()}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ParamSet":
        return cls({k: np.asarray(v["data"], dtype=float).reshape(v["shape"]) for k, v in d.items()})


def init_params(arch: Architecture, rng: np.random.Generator | int) -> ParamSet:
    """Glorot-uniform weights, zero biases."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    tensors = {}
    for name, shape in arch.param_shapes().items():
        if name.endswith(".weight"):
            limit = np.sqrt(6.0 / (shape[0] + shape[1]))
            tensors[name] = rng.uniform(-limit, limit, size=shape)
        else:
            tensors[name] = np.zeros(shape)
    return ParamSet(tensors)


@dataclass
class Tape:
    arch: Architecture
    params: ParamSet
    x: np.ndarray
    pre: list[np.ndarray]
    act: list[np.ndarray]
    output: np.ndarray
    squeeze: bool

    def replay(self) -> np.ndarray:
        out, _ = forward(self.params, self.x[0] if self.squeeze else self.x, self.arch)
        return out


@dataclass
class Gradients:
    params: dict[str, np.ndarray]
    input: np.ndarray


def forward(params: Mapping[str, np.ndarray], x, arch: Architecture) -> tuple[np.ndarray, Tape]:
    """Evaluate the network on one input vector or a batch of row vectors."""
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    X = x[None, :] if squeeze else x
    if X.ndim != 2 or X.shape[1] != arch.input_width:
        raise ArchitectureError(f"input width {X.shape[-1]} does not match architecture width {arch.input_width}")
    pre, act = [], [X]
    h = X
    for i in range(len(arch.hidden)):
        z = h @ params[f"trunk.{i}.weight"] + params[f"trunk.{i}.bias"]
        h = np.maximum(z, 0.0)
        pre.append(z)
        act.append(h)
    outs = [h @ params[f"head.{n}.weight"] + params[f"head.{n}.bias"] for n, _ in arch.heads]
    out = np.concatenate(outs, axis=1)
    tape = Tape(arch, ParamSet(params) if not isinstance(params, ParamSet) else params, X, pre, act, out, squeeze)
    return (out[0] if squeeze else out), tape


def backward(tape: Tape, selector) -> Gradients:
    """Reverse-mode gradients of a scalar functional of the output.

    ``selector`` is either an output index (the scalar is that output, summed
    over the batch) or an array shaped like the output holding d(scalar)/d(out).
    """
    arch = tape.arch
    out = tape.output
    if isinstance(selector, (int, np.integer)):
        if not 0 <= selector < arch.output_width:
            raise IndexError(f"output selector {selector} out of range [0, {arch.output_width})")
        g_out = np.zeros_like(out)
        g_out[:, selector] = 1.0
    else:
        g_out = np.asarray(selector, dtype=float)
        if tape.squeeze and g_out.ndim == 1:
            g_out = g_out[None, :]
        if g_out.shape != out.shape:
            raise ArchitectureError(f"upstream gradient shape {g_out.shape} != output shape {out.shape}")

    grads: dict[str, np.ndarray] = {}
    h = tape.act[-1]
    g_h = np.zeros_like(h)
    start = 0
    for name, w in arch.heads:
        g = g_out[:, start:start + w]
        grads[f"head.{name}.weight"] = h.T @ g
        grads[f"head.{name}.bias"] = g.sum(axis=0)
        g_h = g_h + g @ tape.params[f"head.{name}.weight"].T
        start += w
    for i in reversed(range(len(arch.hidden))):
        g_z = g_h * (tape.pre[i] > 0)
        h_in = tape.act[i]
        grads[f"trunk.{i}.weight"] = h_in.T @ g_z
        grads[f"trunk.{i}.bias"] = g_z.sum(axis=0)
        g_h = g_z @ tape.params[f"trunk.{i}.weight"].T
    g_x = g_h[0] if tape.squeeze else g_h
    return Gradients({k: grads[k] for k in sorted(grads)}, g_x)


# -- losses ------------------------------------------------------------------

def softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(shifted).sum(axis=1))
    loss = float(np.mean(logsum - shifted[np.arange(n), labels]))
    g = softmax(logits)
    g[np.arange(n), labels] -= 1.0
    return loss, g / n


def masked_mse(pred: np.ndarray, target: np.ndarray, mask: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over rows where ``mask`` is true."""
    rows = int(mask.sum())
    if rows == 0:
        return 0.0, np.zeros_like(pred)
    diff = (pred - target) * mask[:, None]
    denom = rows * pred.shape[1]
    return float(np.sum(diff * diff) / denom), 2.0 * diff / denom


# -- Adam ----------------------------------------------------------------------

@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0
    lr: float = 0.02
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0

    @classmethod
    def for_params(cls, params: Mapping[str, np.ndarray], **hyper) -> "AdamState":
        return cls(
            m={k: np.zeros_like(v) for k, v in params.items()},
            v={k: np.zeros_like(v) for k, v in params.items()},
            **hyper,
        )

    def to_dict(self) -> dict:
        return {
            "step": self.step, "lr": self.lr, "beta1": self.beta1, "beta2": self.beta2,
            "eps": self.eps, "weight_decay": self.weight_decay,
            "m": ParamSet(self.m).to_dict(), "v": ParamSet(self.v).to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "AdamState":
        return cls(
            m=dict(ParamSet.from_dict(d["m"])), v=dict(ParamSet.from_dict(d["v"])),
            step=int(d["step"]), lr=float(d["lr"]), beta1=float(d["beta1"]),
            beta2=float(d["beta2"]), eps=float(d["eps"]), weight_decay=float(d["weight_decay"]),
        )


def adam_step(
    params: ParamSet,
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float | None = None,
    weight_decay: float | None = None,
) -> tuple[ParamSet, AdamState]:
    """One bias-corrected Adam update.

    Weight decay is L2-style: ``wd * param`` is added to the gradient before
    the moment updates. Returns new parameter arrays; inputs are not mutated.
    """
    lr = state.lr if lr is None else lr
    wd = state.weight_decay if weight_decay is None else weight_decay
    bad = [k for k in params if not np.all(np.isfinite(grads[k]))]
    if bad:
        raise NonFiniteGradientError(f"non-finite gradient at step {state.step + 1} in {bad}")
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    new, m_new, v_new = {}, {}, {}
    for k in params:
        p = params[k]
        g = grads[k] + wd * p if wd else grads[k]
        if g.shape != p.shape:
            raise ArchitectureError(f"gradient shape mismatch for {k!r}")
        m = b1 * state.m[k] + (1.0 - b1) * g
        v = b2 * state.v[k] + (1.0 - b2) * g * g
        new[k] = p - lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        m_new[k], v_new[k] = m, v
    out_state = AdamState(m_new, v_new, t, state.lr, b1, b2, state.eps, state.weight_decay)
    return ParamSet(new), out_state


# -- gradient check --------------------------------------------------------------

def relative_error(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.abs(a - b) / (np.abs(a) + np.abs(b) + 1e-12)


def _off_kink_input(arch: Architecture, params: ParamSet, rng: np.random.Generator, margin: float):
    for _ in range(1000):
        x = rng.normal(size=arch.input_width)
        _, tape = forward(params, x, arch)
        if all(np.min(np.abs(z)) > margin for z in tape.pre):
            return x
    return None


def _win_probability_functional(arch: Architecture):
    sl = arch.head_slice(arch.heads[0][0]) if arch.heads[0][1] >= 2 else None

    def value(out):
        if sl is None:
            return float(out[0])
        return float(softmax(out[sl])[0])

    def upstream(out):
        g = np.zeros_like(out)
        if sl is None:
            g[0] = 1.0
            return g
        z = out[sl]
        p = softmax(z)
        # d p0 / d z_j = p0 (delta_0j - p_j)
        g[sl] = p[0] * ((np.arange(len(z)) == 0) - p)
        return g

    return value, upstream


def grad_check(arch: Architecture, seed: int, h: float = 1e-5, margin: float = 1e-3) -> dict:
    """Compare reverse-mode and central-difference gradients on a random
    instance, for parameters and inputs.

    Two scalar functionals are checked: a random projection of the full
    output, and the softmax probability of the first head's first class.
    """
    rng = np.random.default_rng(seed)
    base = init_params(arch, rng)
    x = None
    for _ in range(20):
        # non-zero biases so the check exercises them; redrawn when a dead
        # layer pins some pre-activation to a bias inside the margin
        params = ParamSet({k: (v + rng.normal(0, 0.1, v.shape) if k.endswith("bias") else v) for k, v in base.items()})
        x = _off_kink_input(arch, params, rng, margin)
        if x is not None:
            break
    if x is None:
        raise RuntimeError("could not find an input away from ReLU kinks")
    proj = rng.normal(size=arch.output_width)
    win_value, win_upstream = _win_probability_functional(arch)
    functionals = [
        (lambda out: float(out @ proj), lambda out: proj.copy()),
        (win_value, win_upstream),
    ]
    worst = {"max_rel_error": 0.0, "where": None}
    n_components = 0
    for value, upstream in functionals:
        out, tape = forward(params, x, arch)
        g = backward(tape, upstream(out))

        def f(p, xx):
            return value(forward(p, xx, arch)[0])

        fd_x = np.empty_like(x)
        for i in range(x.size):
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            fd_x[i] = (f(params, xp) - f(params, xm)) / (2 * h)
        checks = [("input", g.input, fd_x)]
        for name in params:
            base = params[name]
            fd = np.empty_like(base)
            flat = fd.reshape(-1)
            for j in range(base.size):
                bp = base.copy().reshape(-1)
                bm = base.copy().reshape(-1)
                bp[j] += h
                bm[j] -= h
                fp = f(params.replace(**{name: bp.reshape(base.shape)}), x)
                fm = f(params.replace(**{name: bm.reshape(base.shape)}), x)
                flat[j] = (fp - fm) / (2 * h)
            checks.append((name, g.params[name], fd))
        for name, ad, fd in checks:
            err = relative_error(ad, fd)
            n_components += err.size
            k = int(np.argmax(err))
            if err.reshape(-1)[k] > worst["max_rel_error"]:
                worst = {"max_rel_error": float(err.reshape(-1)[k]), "where": f"{name}[{k}]"}
    worst["components"] = n_components
    worst["seed"] = seed
    return worst
