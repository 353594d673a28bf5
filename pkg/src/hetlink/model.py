"""Encoders, decoders and a flat named parameter store.

Every forward routine returns a cache that the matching backward routine
consumes, so encode -> decode -> loss can be differentiated exactly without a
general autograd engine.
"""
import hashlib
import struct
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import InputError
from .features import as_feature_matrix

ENCODERS = ("nognn", "gcn", "sage", "sign", "linear")
DECODERS = ("dot", "distmult", "mlp")

_ALIASES = {
    "nognn": "nognn", "none": "nognn", "gcn": "gcn", "sage": "sage",
    "graphsage": "sage", "sign": "sign", "linear": "linear", "lineargnn": "linear",
    "dot": "dot", "distmult": "distmult", "mlp": "mlp",
}


def _canon(name, allowed):
    key = _ALIASES.get(str(name).lower())
    if key not in allowed:
        raise InputError(f"unknown component {name!r}; expected one of {allowed}")
    return key


@dataclass(frozen=True)
class ModelSpec:
    encoder: str = "sage"
    decoder: str = "mlp"
    layers: int = 2
    hidden: int = 256
    embed_dim: int | None = None
    powers: int = 2
    mlp_hidden: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "encoder", _canon(self.encoder, ENCODERS))
        object.__setattr__(self, "decoder", _canon(self.decoder, DECODERS))
        if self.encoder in ("gcn", "sage") and self.layers < 1:
            raise InputError("GCN/SAGE need layers >= 1")
        if self.encoder == "sign" and self.powers < 1:
            raise InputError("SIGN needs powers >= 1")
        if self.hidden < 1 or (self.embed_dim is not None and self.embed_dim < 1):
            raise InputError("hidden and embed_dim must be >= 1")

    @property
    def weightless_encoder(self):
        return self.encoder in ("nognn", "linear")

    def output_dim(self, in_dim):
        if self.weightless_encoder:
            return in_dim
        return self.embed_dim or self.hidden

    def decoder_hidden(self, in_dim):
        return self.mlp_hidden or self.output_dim(in_dim)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        return cls(**known)


class ParamStore:
    """Named tensors that are views into one flat vector, plus a same-layout grad."""

    def __init__(self, layout, data=None):
        self.layout = [(name, tuple(shape)) for name, shape in layout]
        self._slices = {}
        offset = 0
        for name, shape in self.layout:
            size = int(np.prod(shape, dtype=np.int64))
            self._slices[name] = (slice(offset, offset + size), shape)
            offset += size
        self.data = np.zeros(offset) if data is None else np.array(data, dtype=np.float64)
        if self.data.shape != (offset,):
            raise InputError(f"flat vector has {self.data.size} values, layout needs {offset}")
        self.grad = np.zeros(offset)

    def __getitem__(self, name):
        sl, shape = self._slices[name]
        return self.data[sl].reshape(shape)

    def __contains__(self, name):
        return name in self._slices

    def __len__(self):
        return self.data.size

    def g(self, name):
        sl, shape = self._slices[name]
        return self.grad[sl].reshape(shape)

    @property
    def names(self):
        return [name for name, _ in self.layout]

    def zero_grad(self):
        self.grad[:] = 0.0

    def copy(self):
        out = ParamStore(self.layout, self.data.copy())
        out.grad[:] = self.grad
        return out

    def checksum(self):
        return hashlib.sha256(self.data.astype("<f8").tobytes()).hexdigest()


def param_layout(spec, in_dim):
    e = spec.output_dim(in_dim)
    h = spec.hidden
    layout = []
    if spec.encoder in ("gcn", "sage"):
        dims = [in_dim] + [h] * (spec.layers - 1) + [e]
        for l in range(spec.layers):
            if spec.encoder == "gcn":
                layout.append((f"enc.W{l}", (dims[l], dims[l + 1])))
            else:
                layout.append((f"enc.Ws{l}", (dims[l], dims[l + 1])))
                layout.append((f"enc.Wn{l}", (dims[l], dims[l + 1])))
            layout.append((f"enc.b{l}", (dims[l + 1],)))
    elif spec.encoder == "sign":
        for p in range(spec.powers + 1):
            layout.append((f"enc.W{p}", (in_dim, h)))
            layout.append((f"enc.b{p}", (h,)))
        layout.append(("enc.Wout", ((spec.powers + 1) * h, e)))
        layout.append(("enc.bout", (e,)))
    if spec.decoder == "distmult":
        layout += [("dec.w", (e,)), ("dec.b", ())]
    elif spec.decoder == "mlp":
        hd = spec.decoder_hidden(in_dim)
        layout += [("dec.W1a", (e, hd)), ("dec.W1b", (e, hd)), ("dec.b1", (hd,)),
                   ("dec.w2", (hd,)), ("dec.b2", ())]
    return layout


def init_params(spec, in_dim, seed=0):
    """Glorot-uniform weights, zero biases; DistMult w = 1/embed_dim."""
    params = ParamStore(param_layout(spec, in_dim))
    rng = np.random.default_rng(seed)
    e = spec.output_dim(in_dim)
    for name, shape in params.layout:
        view = params[name]
        if name == "dec.w":
            view[...] = 1.0 / e
        elif name in ("dec.W1a", "dec.W1b"):
            s = np.sqrt(6.0 / (2 * shape[0] + shape[1]))
            view[...] = rng.uniform(-s, s, shape)
        elif name == "dec.w2":
            s = np.sqrt(6.0 / (shape[0] + 1))
            view[...] = rng.uniform(-s, s, shape)
        elif len(shape) == 2:
            s = np.sqrt(6.0 / (shape[0] + shape[1]))
            view[...] = rng.uniform(-s, s, shape)
    return params


# ---------------------------------------------------------------- encoders

def _features_array(X):
    if isinstance(X, np.ndarray):
        return np.asarray(X, dtype=np.float64)
    return as_feature_matrix(X).rows


def encode_forward(spec, params, g, X):
    X = _features_array(X)
    if X.shape[0] != g.n_nodes:
        raise InputError(f"features have {X.shape[0]} rows, graph has {g.n_nodes} nodes")
    if spec.encoder == "nognn":
        return X, None
    if spec.encoder == "linear":
        return g.selfloop_mean_operator @ X, None
    if spec.encoder == "gcn":
        return _gcn_forward(spec, params, g, X)
    if spec.encoder == "sage":
        return _sage_forward(spec, params, g, X)
    return _sign_forward(spec, params, g, X)


def encode(spec, params, g, X):
    return encode_forward(spec, params, g, X)[0]


def encode_backward(spec, params, g, cache, dZ):
    if spec.weightless_encoder:
        return
    if spec.encoder == "gcn":
        _gcn_backward(spec, params, g, cache, dZ)
    elif spec.encoder == "sage":
        _sage_backward(spec, params, g, cache, dZ)
    else:
        _sign_backward(spec, params, g, cache, dZ)


def _check_in_dim(params, name, X):
    if params[name].shape[0] != X.shape[1]:
        raise InputError(f"feature dim {X.shape[1]} does not match {name} "
                         f"of shape {params[name].shape}")


def _gcn_forward(spec, params, g, X):
    _check_in_dim(params, "enc.W0", X)
    A = g.gcn_operator
    H, cache = X, []
    for l in range(spec.layers):
        agg = A @ H
        pre = agg @ params[f"enc.W{l}"] + params[f"enc.b{l}"]
        last = l == spec.layers - 1
        cache.append((agg, pre))
        H = pre if last else np.maximum(pre, 0.0)
    return H, cache


def _gcn_backward(spec, params, g, cache, dZ):
    A = g.gcn_operator
    d = dZ
    for l in reversed(range(spec.layers)):
        agg, pre = cache[l]
        if l != spec.layers - 1:
            d = d * (pre > 0)
        params.g(f"enc.W{l}")[...] += agg.T @ d
        params.g(f"enc.b{l}")[...] += d.sum(axis=0)
        if l:
            d = A.T @ (d @ params[f"enc.W{l}"].T)


def _sage_forward(spec, params, g, X):
    _check_in_dim(params, "enc.Ws0", X)
    Mop = g.mean_operator
    H, cache = X, []
    for l in range(spec.layers):
        agg = Mop @ H
        pre = H @ params[f"enc.Ws{l}"] + agg @ params[f"enc.Wn{l}"] + params[f"enc.b{l}"]
        cache.append((H, agg, pre))
        H = pre if l == spec.layers - 1 else np.maximum(pre, 0.0)
    return H, cache


def _sage_backward(spec, params, g, cache, dZ):
    Mop = g.mean_operator
    d = dZ
    for l in reversed(range(spec.layers)):
        H, agg, pre = cache[l]
        if l != spec.layers - 1:
            d = d * (pre > 0)
        params.g(f"enc.Ws{l}")[...] += H.T @ d
        params.g(f"enc.Wn{l}")[...] += agg.T @ d
        params.g(f"enc.b{l}")[...] += d.sum(axis=0)
        if l:
            d = d @ params[f"enc.Ws{l}"].T + Mop.T @ (d @ params[f"enc.Wn{l}"].T)


def sign_features(g, X, powers):
    """[X, A X, A^2 X, ...] with the GCN-normalized operator."""
    out = [X]
    for _ in range(powers):
        out.append(g.gcn_operator @ out[-1])
    return out


def _sign_forward(spec, params, g, X):
    _check_in_dim(params, "enc.W0", X)
    feats = sign_features(g, X, spec.powers)
    parts = [f @ params[f"enc.W{p}"] + params[f"enc.b{p}"] for p, f in enumerate(feats)]
    pre = np.concatenate(parts, axis=1)
    hid = np.maximum(pre, 0.0)
    Z = hid @ params["enc.Wout"] + params["enc.bout"]
    return Z, (feats, pre, hid)


def _sign_backward(spec, params, g, cache, dZ):
    feats, pre, hid = cache
    params.g("enc.Wout")[...] += hid.T @ dZ
    params.g("enc.bout")[...] += dZ.sum(axis=0)
    dpre = (dZ @ params["enc.Wout"].T) * (pre > 0)
    h = spec.hidden
    for p, f in enumerate(feats):
        block = dpre[:, p * h:(p + 1) * h]
        params.g(f"enc.W{p}")[...] += f.T @ block
        params.g(f"enc.b{p}")[...] += block.sum(axis=0)


# ---------------------------------------------------------------- decoders

def _scatter(idx, n, weights=None):
    """Sparse (n, m) matrix S with S[idx[k], k] = weights[k]."""
    m = len(idx)
    data = np.ones(m) if weights is None else weights
    return sp.csr_matrix((data, (idx, np.arange(m))), shape=(n, m))


def decode_forward(spec, params, Z, i, j):
    """Scores for pairs (i[k], j[k]) given node embeddings Z."""
    if spec.decoder == "dot":
        return np.einsum("kd,kd->k", Z[i], Z[j]), None
    if spec.decoder == "distmult":
        w = params["dec.w"]
        if w.shape[0] != Z.shape[1]:
            raise InputError("embedding dim does not match DistMult weight")
        return np.einsum("kd,kd,d->k", Z[i], Z[j], w) + params["dec.b"], None
    # first layer split as W1 = [W1a; W1b] so each node is projected once
    P = Z @ params["dec.W1a"] + params["dec.b1"]
    Q = Z @ params["dec.W1b"]
    h1 = P[i]
    h1 += Q[j]
    np.maximum(h1, 0.0, out=h1)
    h2 = P[j]
    h2 += Q[i]
    np.maximum(h2, 0.0, out=h2)
    w2 = params["dec.w2"]
    s = 0.5 * (h1 @ w2 + h2 @ w2) + params["dec.b2"]
    return s, (h1, h2)


def decode(spec, params, z_i, z_j):
    """Score a single pair of embeddings."""
    z_i = np.asarray(z_i, dtype=np.float64)
    z_j = np.asarray(z_j, dtype=np.float64)
    if z_i.shape != z_j.shape or z_i.ndim != 1:
        raise InputError("decode expects two 1-D embeddings of equal length")
    Z = np.stack([z_i, z_j])
    return float(decode_forward(spec, params, Z, np.array([0]), np.array([1]))[0][0])


def decode_backward(spec, params, Z, i, j, cache, gs):
    """Accumulate decoder grads; return dL/dZ given dL/dscore per pair."""
    n = Z.shape[0]
    if spec.decoder != "mlp":
        Si, Sj = _scatter(i, n), _scatter(j, n)
    if spec.decoder == "dot":
        return Si @ (gs[:, None] * Z[j]) + Sj @ (gs[:, None] * Z[i])
    if spec.decoder == "distmult":
        w = params["dec.w"]
        zi, zj = Z[i], Z[j]
        params.g("dec.w")[...] += np.einsum("k,kd,kd->d", gs, zi, zj)
        params.g("dec.b")[...] += gs.sum()
        return Si @ (gs[:, None] * zj * w) + Sj @ (gs[:, None] * zi * w)
    # consumes the cache: h1, h2 are overwritten by their ReLU masks
    h1, h2 = cache
    w2 = params["dec.w2"]
    half = 0.5 * gs
    params.g("dec.w2")[...] += h1.T @ half + h2.T @ half
    params.g("dec.b2")[...] += gs.sum()
    m1 = np.greater(h1, 0.0, out=h1)
    m2 = np.greater(h2, 0.0, out=h2)
    params.g("dec.b1")[...] += w2 * (m1.T @ half + m2.T @ half)
    Sih, Sjh = _scatter(i, n, half), _scatter(j, n, half)
    dP = (Sih @ m1 + Sjh @ m2) * w2
    dQ = (Sjh @ m1 + Sih @ m2) * w2
    params.g("dec.W1a")[...] += Z.T @ dP
    params.g("dec.W1b")[...] += Z.T @ dQ
    return dP @ params["dec.W1a"].T + dQ @ params["dec.W1b"].T


def check_pairs(pairs, n_nodes):
    pairs = np.asarray(pairs, dtype=np.int64)
    if pairs.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise InputError(f"pairs must have shape (m, 2), got {pairs.shape}")
    if pairs.min() < 0 or pairs.max() >= n_nodes:
        raise InputError("pair node id out of range")
    return pairs


def score_embeddings(spec, params, Z, pairs, chunk=200_000):
    out = np.empty(len(pairs))
    for start in range(0, len(pairs), chunk):
        block = pairs[start:start + chunk]
        out[start:start + chunk] = decode_forward(spec, params, Z, block[:, 0], block[:, 1])[0]
    return out


def score_pairs(spec, params, g, X, pairs):
    pairs = check_pairs(pairs, g.n_nodes)
    Z = encode(spec, params, g, X)
    return score_embeddings(spec, params, Z, pairs)


# ---------------------------------------------------------------- checkpoints

_CKPT_MAGIC = b"HLPP"


def save_checkpoint(params, path):
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<Q", len(params.layout)))
        for name, shape in params.layout:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", len(shape)))
            for dim in shape:
                fh.write(struct.pack("<Q", dim))
        fh.write(struct.pack("<Q", len(params.data)))
        fh.write(params.data.astype("<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        if fh.read(4) != _CKPT_MAGIC:
            raise InputError(f"{path}: not a parameter checkpoint")
        (count,) = struct.unpack("<Q", fh.read(8))
        layout = []
        for _ in range(count):
            (length,) = struct.unpack("<I", fh.read(4))
            name = fh.read(length).decode("utf-8")
            (ndim,) = struct.unpack("<I", fh.read(4))
            shape = tuple(struct.unpack("<Q", fh.read(8))[0] for _ in range(ndim))
            layout.append((name, shape))
        (size,) = struct.unpack("<Q", fh.read(8))
        body = fh.read()
    if len(body) != 8 * size:
        raise InputError(f"{path}: truncated parameter vector")
    return ParamStore(layout, np.frombuffer(body, dtype="<f8"))
