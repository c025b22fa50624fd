"""Minimal feed-forward Q-network (22-20-10-5) with manual backpropagation.

No autodiff framework: forward, backward and the gradient-descent step are
written out in numpy so the whole optimization path is reproducible and
checkable against finite differences. Hidden layers use the rectifier;
the output layer is linear. Weights live in plain arrays, x @ w + b per
layer, so a parameter set is just six arrays.
"""

from dataclasses import dataclass

import numpy as np

LAYER_SIZES = (22, 20, 10, 5)


@dataclass
class NetworkParams:
    w1: np.ndarray   # (22, 20)
    b1: np.ndarray   # (20,)
    w2: np.ndarray   # (20, 10)
    b2: np.ndarray   # (10,)
    w3: np.ndarray   # (10, 5)
    b3: np.ndarray   # (5,)

    def fields(self):
        return [self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]

    def copy(self) -> "NetworkParams":
        return NetworkParams(*[a.copy() for a in self.fields()])


# Gradients are shape-congruent with the parameters they differentiate.
GradientSet = NetworkParams

FIELD_NAMES = ("w1", "b1", "w2", "b2", "w3", "b3")


def init_network(seed: int) -> NetworkParams:
    """Uniform weights in +-sqrt(6/fan_in), zero biases, reproducible from seed."""
    rng = np.random.default_rng(seed)
    n0, n1, n2, n3 = LAYER_SIZES

    def layer(fan_in, fan_out):
        limit = np.sqrt(6.0 / fan_in)
        return rng.uniform(-limit, limit, size=(fan_in, fan_out))

    return NetworkParams(
        w1=layer(n0, n1), b1=np.zeros(n1),
        w2=layer(n1, n2), b2=np.zeros(n2),
        w3=layer(n2, n3), b3=np.zeros(n3),
    )


def _forward_cached(params: NetworkParams, x: np.ndarray):
    h1 = np.maximum(x @ params.w1 + params.b1, 0.0)
    h2 = np.maximum(h1 @ params.w2 + params.b2, 0.0)
    q = h2 @ params.w3 + params.b3
    return q, h1, h2


def forward(params: NetworkParams, obs: np.ndarray) -> np.ndarray:
    """Q-values for one observation (22,) -> (5,)."""
    obs = np.asarray(obs, dtype=float)
    if obs.shape != (LAYER_SIZES[0],):
        raise ValueError("expected observation of shape (%d,), got %s"
                         % (LAYER_SIZES[0], obs.shape))
    q, _, _ = _forward_cached(params, obs)
    return q


def forward_batch(params: NetworkParams, obs: np.ndarray) -> np.ndarray:
    """Q-values for a batch (n, 22) -> (n, 5)."""
    obs = np.asarray(obs, dtype=float)
    if obs.ndim != 2 or obs.shape[1] != LAYER_SIZES[0]:
        raise ValueError("expected batch of shape (n, %d), got %s"
                         % (LAYER_SIZES[0], obs.shape))
    q, _, _ = _forward_cached(params, obs)
    return q


def backward(params: NetworkParams, obs: np.ndarray, action_index: int,
             td_target: float):
    """Squared TD error on one (obs, action) and its parameter gradients.

    loss = (td_target - Q(obs, action))^2; gradients flow only through the
    selected action's output unit. Returns (loss, GradientSet).
    """
    obs = np.asarray(obs, dtype=float)
    q, h1, h2 = _forward_cached(params, obs)
    err = q[action_index] - td_target
    loss = err * err

    # dL/dq is zero except at the selected action.
    dq = np.zeros(LAYER_SIZES[3])
    dq[action_index] = 2.0 * err

    dw3 = np.outer(h2, dq)
    db3 = dq
    dh2 = (params.w3 @ dq) * (h2 > 0)
    dw2 = np.outer(h1, dh2)
    db2 = dh2
    dh1 = (params.w2 @ dh2) * (h1 > 0)
    dw1 = np.outer(obs, dh1)
    db1 = dh1
    return loss, NetworkParams(dw1, db1, dw2, db2, dw3, db3)


def backward_batch(params: NetworkParams, obs: np.ndarray, actions: np.ndarray,
                   td_targets: np.ndarray):
    """Mean squared TD error over a batch with batch-averaged gradients.

    Vectorized equivalent of averaging `backward` over the batch rows;
    returns (mean loss, GradientSet).
    """
    obs = np.asarray(obs, dtype=float)
    actions = np.asarray(actions, dtype=int)
    td_targets = np.asarray(td_targets, dtype=float)
    n = obs.shape[0]

    q, h1, h2 = _forward_cached(params, obs)
    err = q[np.arange(n), actions] - td_targets
    loss = float(np.mean(err * err))

    dq = np.zeros_like(q)
    dq[np.arange(n), actions] = 2.0 * err / n

    dw3 = h2.T @ dq
    db3 = dq.sum(axis=0)
    dh2 = (dq @ params.w3.T) * (h2 > 0)
    dw2 = h1.T @ dh2
    db2 = dh2.sum(axis=0)
    dh1 = (dh2 @ params.w2.T) * (h1 > 0)
    dw1 = obs.T @ dh1
    db1 = dh1.sum(axis=0)
    return loss, NetworkParams(dw1, db1, dw2, db2, dw3, db3)


def clip_gradients(grads: GradientSet, limit: float) -> GradientSet:
    """Elementwise clip to [-limit, limit]; bounds the terminal-reward spikes."""
    return NetworkParams(*[np.clip(g, -limit, limit) for g in grads.fields()])


def sgd_step(params: NetworkParams, grads: GradientSet, lr: float) -> NetworkParams:
    """params - lr * grads, elementwise."""
    for p, g in zip(params.fields(), grads.fields()):
        if p.shape != g.shape:
            raise ValueError("gradient shape %s does not match parameter shape %s"
                             % (g.shape, p.shape))
    return NetworkParams(*[p - lr * g
                           for p, g in zip(params.fields(), grads.fields())])


# ---------------------------------------------------------------------------
# Weight snapshots: versioned plain-text record, portable across
# implementations. Line 1 is the format tag, line 2 the layer sizes, then one
# line per field ("w1".."b3" in order) holding the row-major values with full
# float round-trip precision.
# ---------------------------------------------------------------------------

SNAPSHOT_TAG = "qnet-weights v1"


def save_weights(params: NetworkParams, path):
    with open(path, "w") as f:
        f.write(SNAPSHOT_TAG + "\n")
        f.write("layers %s\n" % " ".join(str(s) for s in LAYER_SIZES))
        for name, arr in zip(FIELD_NAMES, params.fields()):
            values = " ".join(repr(float(v)) for v in arr.ravel(order="C"))
            f.write("%s %s\n" % (name, values))


def load_weights(path) -> NetworkParams:
    with open(path) as f:
        lines = [line.rstrip("\n") for line in f]
    if not lines or lines[0] != SNAPSHOT_TAG:
        raise ValueError("not a %r file: %s" % (SNAPSHOT_TAG, path))
    sizes = tuple(int(t) for t in lines[1].split()[1:])
    if sizes != LAYER_SIZES:
        raise ValueError("layer sizes %s do not match expected %s" % (sizes, LAYER_SIZES))
    shapes = {
        "w1": (sizes[0], sizes[1]), "b1": (sizes[1],),
        "w2": (sizes[1], sizes[2]), "b2": (sizes[2],),
        "w3": (sizes[2], sizes[3]), "b3": (sizes[3],),
    }
    fields = {}
    for line in lines[2:]:
        name, *values = line.split()
        fields[name] = np.array([float(v) for v in values]).reshape(shapes[name])
    missing = [n for n in FIELD_NAMES if n not in fields]
    if missing:
        raise ValueError("snapshot missing fields: %s" % ", ".join(missing))
    return NetworkParams(*[fields[n] for n in FIELD_NAMES])
