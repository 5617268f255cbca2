"""Dense float64 tensors with reverse-mode automatic differentiation.

Deliberately small: only the operations the parser needs, all on numpy
arrays, all double precision so finite-difference checks are tight.  A
computation graph is built implicitly through parent links on each Tensor
and is confined to a single thread.
"""

from __future__ import annotations

import io
import json
import zipfile
from typing import Callable, Sequence

import numpy as np

from .errors import DiscoparseError

CHECKPOINT_VERSION = 1


class DimensionError(DiscoparseError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents")

    def __init__(self, data, requires_grad: bool = False,
                 _parents: tuple = ()):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        # each parent is (tensor, fn) with fn mapping output grad -> parent grad
        self._parents = _parents

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    # -- operator sugar ----------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __getitem__(self, key):
        return take(self, key)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _track(*args: Tensor) -> bool:
    return any(a.requires_grad or a._parents for a in args)


def _make(data, *parent_pairs) -> Tensor:
    parents = tuple((t, fn) for t, fn in parent_pairs if t.requires_grad or t._parents)
    return Tensor(data, _parents=parents)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back to the original operand shape."""
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data + b.data
    except ValueError:
        raise DimensionError(f"add: incompatible shapes {a.shape} and {b.shape}")
    return _make(out,
                 (a, lambda g: _unbroadcast(g, a.data.shape)),
                 (b, lambda g: _unbroadcast(g, b.data.shape)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data * b.data
    except ValueError:
        raise DimensionError(f"mul: incompatible shapes {a.shape} and {b.shape}")
    return _make(out,
                 (a, lambda g: _unbroadcast(g * b.data, a.data.shape)),
                 (b, lambda g: _unbroadcast(g * a.data, b.data.shape)))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    if ad.ndim not in (1, 2) or bd.ndim not in (1, 2):
        raise DimensionError(f"matmul expects 1-D/2-D operands, got {a.shape} @ {b.shape}")
    if ad.shape[-1] != (bd.shape[0] if bd.ndim >= 1 else None):
        raise DimensionError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    out = ad @ bd

    def da(g):
        if ad.ndim == 1 and bd.ndim == 1:
            return g * bd
        if ad.ndim == 1:  # (k,) @ (k,n) -> (n,)
            return bd @ g
        if bd.ndim == 1:  # (m,k) @ (k,) -> (m,)
            return np.outer(g, bd)
        return g @ bd.T

    def db(g):
        if ad.ndim == 1 and bd.ndim == 1:
            return g * ad
        if ad.ndim == 1:
            return np.outer(ad, g)
        if bd.ndim == 1:
            return ad.T @ g
        return ad.T @ g

    return _make(out, (a, da), (b, db))


def take(a: Tensor, key) -> Tensor:
    a = as_tensor(a)
    out = a.data[key]

    def back(g):
        full = np.zeros_like(a.data)
        np.add.at(full, key, g)
        return full

    return _make(out, (a, back))


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    out = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def back_fn(i):
        def back(g):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(offsets[i], offsets[i + 1])
            return g[tuple(sl)]
        return back

    return _make(out, *[(p, back_fn(i)) for i, p in enumerate(parts)])


def reshape(a: Tensor, shape) -> Tensor:
    a = as_tensor(a)
    return _make(a.data.reshape(shape), (a, lambda g: g.reshape(a.data.shape)))


def tsum(a: Tensor, axis=None) -> Tensor:
    a = as_tensor(a)
    out = a.data.sum(axis=axis)

    def back(g):
        if axis is None:
            return np.full_like(a.data, g)
        return np.expand_dims(g, axis) * np.ones_like(a.data)

    return _make(out, (a, back))


def tanh(a: Tensor) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)
    return _make(out, (a, lambda g: g * (1.0 - out * out)))


def sigmoid(a: Tensor) -> Tensor:
    a = as_tensor(a)
    out = 1.0 / (1.0 + np.exp(-a.data))
    return _make(out, (a, lambda g: g * out * (1.0 - out)))


def elu(a: Tensor, alpha: float = 1.0) -> Tensor:
    a = as_tensor(a)
    neg = alpha * (np.exp(np.minimum(a.data, 0.0)) - 1.0)
    out = np.where(a.data > 0, a.data, neg)
    return _make(out, (a, lambda g: g * np.where(a.data > 0, 1.0, neg + alpha)))


def softmax(v: Tensor) -> Tensor:
    v = as_tensor(v)
    if v.data.ndim != 1:
        raise DimensionError(f"softmax expects a vector, got shape {v.shape}")
    shifted = v.data - v.data.max()
    e = np.exp(shifted)
    out = e / e.sum()
    return _make(out, (v, lambda g: out * (g - np.dot(g, out))))


def cross_entropy(scores: Tensor, gold: int) -> Tensor:
    """-log softmax(scores)[gold], numerically stable."""
    scores = as_tensor(scores)
    if scores.data.ndim != 1:
        raise DimensionError(f"cross_entropy expects a vector, got {scores.shape}")
    m = scores.data.max()
    lse = m + np.log(np.exp(scores.data - m).sum())
    out = lse - scores.data[gold]

    def back(g):
        p = np.exp(scores.data - lse)
        p[gold] -= 1.0
        return g * p

    return _make(out, (scores, back))


def dropout(x: Tensor, rate: float, training: bool,
            rng: np.random.Generator | None = None) -> Tensor:
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0,1), got {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    x = as_tensor(x)
    mask = (rng.random(x.data.shape) >= rate) / (1.0 - rate)
    return _make(x.data * mask, (x, lambda g: g * mask))


def conv1d_maxpool(chars: Tensor, filters: Tensor, bias: Tensor,
                   window: int) -> Tensor:
    """Character convolution with max-over-time pooling.

    chars: [T, d] character embeddings; filters: [window*d, F]; bias: [F].
    The sequence is zero-padded so any word, however short, yields one
    fixed-size [F] vector.
    """
    chars, filters, bias = as_tensor(chars), as_tensor(filters), as_tensor(bias)
    T, d = chars.data.shape
    wd, F = filters.data.shape
    if wd != window * d:
        raise DimensionError(
            f"conv1d_maxpool: filters shape {filters.shape} does not match "
            f"window {window} x char dim {d}")
    left = (window - 1) // 2
    right = window - 1 - left
    padded = np.zeros((T + left + right, d))
    padded[left:left + T] = chars.data
    windows = np.stack([padded[t:t + window].ravel() for t in range(T)])  # [T, w*d]
    scores = windows @ filters.data + bias.data  # [T, F]
    best = scores.argmax(axis=0)  # [F]
    out = scores[best, np.arange(F)]

    def d_scores(g):
        ds = np.zeros_like(scores)
        ds[best, np.arange(F)] = g
        return ds

    def d_chars(g):
        dwin = d_scores(g) @ filters.data.T  # [T, w*d]
        dpad = np.zeros_like(padded)
        for t in range(T):
            dpad[t:t + window] += dwin[t].reshape(window, d)
        return dpad[left:left + T]

    return _make(out,
                 (chars, d_chars),
                 (filters, lambda g: windows.T @ d_scores(g)),
                 (bias, lambda g: g))


def lstm_cell(x: Tensor, h_prev: Tensor, c_prev: Tensor,
              w_ih: Tensor, w_hh: Tensor, b: Tensor) -> tuple[Tensor, Tensor]:
    """Standard LSTM cell; gate order in the stacked weights is i, f, g, o."""
    hidden = w_hh.data.shape[0]
    z = add(add(matmul(x, w_ih), matmul(h_prev, w_hh)), b)
    i = sigmoid(z[0:hidden])
    f = sigmoid(z[hidden:2 * hidden])
    g = tanh(z[2 * hidden:3 * hidden])
    o = sigmoid(z[3 * hidden:4 * hidden])
    c = add(mul(f, c_prev), mul(i, g))
    h = mul(o, tanh(c))
    return h, c


# ---------------------------------------------------------------------------
# backward pass


def backward(loss: Tensor) -> None:
    """Accumulate d loss / d tensor into .grad of every requires_grad leaf."""
    if loss.data.size != 1:
        raise DiscoparseError(f"backward needs a scalar loss, got shape {loss.shape}")
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(topo):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.requires_grad:
            if node.grad is None:
                node.grad = np.zeros_like(node.data)
            node.grad += g.reshape(node.data.shape)
        for parent, fn in node._parents:
            pg = fn(g)
            acc = grads.get(id(parent))
            if acc is None:
                grads[id(parent)] = np.array(pg, dtype=np.float64, copy=True)
            else:
                acc += pg


def grad_check(f: Callable[[], Tensor], params: Sequence[Tensor],
               step: float = 1e-5, max_coords_per_tensor: int = 8,
               seed: int = 0) -> float:
    """Max relative error of analytic vs central-difference gradients.

    f must be deterministic (dropout off).  Error per coordinate is
    |analytic - numeric| / max(1, |analytic| + |numeric|).
    """
    if step <= 0:
        raise ValueError("step must be positive")
    for p in params:
        p.zero_grad()
    backward(f())
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy()
                for p in params]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p, ana in zip(params, analytic):
        flat = p.data.reshape(-1)
        k = min(max_coords_per_tensor, flat.size)
        coords = rng.choice(flat.size, size=k, replace=False)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + step
            up = float(f().data)
            flat[c] = orig - step
            down = float(f().data)
            flat[c] = orig
            num = (up - down) / (2.0 * step)
            a = float(ana.reshape(-1)[c])
            err = abs(a - num) / max(1.0, abs(a) + abs(num))
            worst = max(worst, err)
    for p in params:
        p.zero_grad()
    return worst


# ---------------------------------------------------------------------------
# checkpoint container: zip of .npy entries plus a JSON manifest


def save_tensors(path, tensors: dict[str, np.ndarray],
                 extra: dict[str, str] | None = None) -> None:
    with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as zf:
        manifest = {"version": CHECKPOINT_VERSION, "names": sorted(tensors)}
        zf.writestr("manifest.json", json.dumps(manifest))
        for name, arr in sorted(tensors.items()):
            buf = io.BytesIO()
            np.save(buf, np.asarray(arr, dtype=np.float64))
            zf.writestr(f"tensors/{name}.npy", buf.getvalue())
        for name, text in (extra or {}).items():
            zf.writestr(f"extra/{name}", text)


def load_tensors(path) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    with zipfile.ZipFile(path) as zf:
        manifest = json.loads(zf.read("manifest.json"))
        if manifest.get("version") != CHECKPOINT_VERSION:
            raise DiscoparseError(
                f"unsupported checkpoint version {manifest.get('version')}")
        tensors = {}
        for name in manifest["names"]:
            tensors[name] = np.load(io.BytesIO(zf.read(f"tensors/{name}.npy")))
        extra = {}
        for info in zf.infolist():
            if info.filename.startswith("extra/"):
                extra[info.filename[len("extra/"):]] = zf.read(info.filename).decode()
    return tensors, extra
