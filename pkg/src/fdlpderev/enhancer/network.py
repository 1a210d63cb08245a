"""CLSTM gain predictor: log envelope -> same-padded conv stack (ReLU) ->
per-frame flatten -> stacked LSTMs over time -> fixed scale -> exp.

Parameters live in a plain ``dict`` of float64 arrays keyed by tensor name;
gradients use the same keys. Gate order inside the LSTM weights is
input, forget, output, candidate.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ContractViolationError, InvalidArgumentError, NumericOverflowError
from ..fdlp import EnvelopeMatrix, GainMatrix, apply_gain


def param_shapes(config):
    shapes = {}
    cin = 1
    for i, (cout, kt, kq) in enumerate(config.conv_layers):
        shapes[f"conv{i}.weight"] = (cout, cin, kt, kq)
        shapes[f"conv{i}.bias"] = (cout,)
        cin = cout
    d = cin * config.num_bands
    for j, h in enumerate(config.lstm_sizes):
        shapes[f"lstm{j}.w_in"] = (d, 4 * h)
        shapes[f"lstm{j}.w_rec"] = (h, 4 * h)
        shapes[f"lstm{j}.bias"] = (4 * h,)
        d = h
    return shapes


def final_layer_names(config):
    j = len(config.lstm_sizes) - 1
    return [f"lstm{j}.w_in", f"lstm{j}.w_rec", f"lstm{j}.bias"]


def init_params(config, seed=None):
    """He-normal conv kernels, uniform(+-1/sqrt(H)) LSTM weights, forget bias 1."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    params = {}
    for name, shape in param_shapes(config).items():
        if name.startswith("conv") and name.endswith("weight"):
            fan_in = shape[1] * shape[2] * shape[3]
            params[name] = rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)
        elif name.startswith("conv"):
            params[name] = np.zeros(shape)
        elif name.endswith("bias"):
            b = np.zeros(shape)
            h = shape[0] // 4
            b[h:2 * h] = 1.0
            params[name] = b
        else:
            h = shape[1] // 4
            bound = 1.0 / np.sqrt(h)
            params[name] = rng.uniform(-bound, bound, shape)
    if config.final_init == "zero":
        zero_final_layer(params, config)
    return params


def zero_final_layer(params, config):
    """Zero the last LSTM layer in place: its output is then exactly 0, so
    the predicted gain is exactly 1."""
    for name in final_layer_names(config):
        params[name] = np.zeros_like(params[name])
    return params


def check_params(params, config):
    shapes = param_shapes(config)
    if set(params) != set(shapes):
        missing = sorted(set(shapes) - set(params))
        extra = sorted(set(params) - set(shapes))
        raise InvalidArgumentError(f"parameter set mismatch; missing {missing}, unexpected {extra}")
    for name, shape in shapes.items():
        if params[name].shape != shape:
            raise InvalidArgumentError(
                f"{name}: expected shape {shape}, got {params[name].shape}")


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class Tape:
    """Activations recorded by :func:`forward` for :func:`backward`."""

    def __init__(self):
        self.filled = False
        self.conv = []
        self.lstm = []
        self.shape = None

    def clear(self):
        self.__init__()


def _conv_patches(padded, dt, t, q, kq):
    # (cin, T, Q, kq) view -> (cin*kq, T*Q)
    win = sliding_window_view(padded[:, dt:dt + t, :], kq, axis=2)
    cin = padded.shape[0]
    return win.transpose(0, 3, 1, 2).reshape(cin * kq, t * q)


def conv_forward(x, weight, bias):
    """Same-size 2-D cross-correlation. x: (cin, T, Q) -> (cout, T, Q)."""
    cout, cin, kt, kq = weight.shape
    _, t, q = x.shape
    pt, pq = kt // 2, kq // 2
    padded = np.pad(x, ((0, 0), (pt, pt), (pq, pq)))
    out = np.zeros((cout, t * q))
    for dt in range(kt):
        w = weight[:, :, dt, :].reshape(cout, cin * kq)
        out += w @ _conv_patches(padded, dt, t, q, kq)
    out += bias[:, None]
    return out.reshape(cout, t, q)


def conv_backward(x, weight, dout, need_input_grad=True):
    cout, cin, kt, kq = weight.shape
    _, t, q = x.shape
    pt, pq = kt // 2, kq // 2
    padded = np.pad(x, ((0, 0), (pt, pt), (pq, pq)))
    dout = dout.reshape(cout, t * q)
    dweight = np.empty_like(weight)
    dpadded = np.zeros_like(padded) if need_input_grad else None
    for dt in range(kt):
        patches = _conv_patches(padded, dt, t, q, kq)
        dweight[:, :, dt, :] = (dout @ patches.T).reshape(cout, cin, kq)
        if need_input_grad:
            w = weight[:, :, dt, :].reshape(cout, cin * kq)
            dp = (w.T @ dout).reshape(cin, kq, t, q)
            for dq in range(kq):
                dpadded[:, dt:dt + t, dq:dq + q] += dp[:, dq]
    dbias = dout.sum(axis=1)
    dx = dpadded[:, pt:pt + t, pq:pq + q] if need_input_grad else None
    return dx, dweight, dbias


def lstm_forward(x, w_in, w_rec, bias):
    """Unidirectional LSTM over the rows of x (T, D), zero initial state."""
    t_len = x.shape[0]
    h_dim = w_rec.shape[0]
    pre = x @ w_in + bias
    gates = np.empty((t_len, 4 * h_dim))
    cells = np.empty((t_len, h_dim))
    hidden = np.empty((t_len, h_dim))
    h = np.zeros(h_dim)
    c = np.zeros(h_dim)
    for t in range(t_len):
        a = pre[t] + h @ w_rec
        g = gates[t]
        g[:3 * h_dim] = _sigmoid(a[:3 * h_dim])
        g[3 * h_dim:] = np.tanh(a[3 * h_dim:])
        c = g[h_dim:2 * h_dim] * c + g[:h_dim] * g[3 * h_dim:]
        h = g[2 * h_dim:3 * h_dim] * np.tanh(c)
        cells[t] = c
        hidden[t] = h
    return hidden, (gates, cells)


def lstm_backward(x, w_in, w_rec, hidden, cache, dhidden, need_input_grad=True):
    """Backpropagation through time for :func:`lstm_forward`."""
    gates, cells = cache
    t_len, h_dim = hidden.shape
    dgates = np.empty_like(gates)
    dh_next = np.zeros(h_dim)
    dc_next = np.zeros(h_dim)
    zeros = np.zeros(h_dim)
    for t in range(t_len - 1, -1, -1):
        g = gates[t]
        i, f, o, cand = g[:h_dim], g[h_dim:2 * h_dim], g[2 * h_dim:3 * h_dim], g[3 * h_dim:]
        tanh_c = np.tanh(cells[t])
        c_prev = cells[t - 1] if t > 0 else zeros
        dh = dhidden[t] + dh_next
        dc = dh * o * (1.0 - tanh_c ** 2) + dc_next
        da = dgates[t]
        da[:h_dim] = dc * cand * i * (1.0 - i)
        da[h_dim:2 * h_dim] = dc * c_prev * f * (1.0 - f)
        da[2 * h_dim:3 * h_dim] = dh * tanh_c * o * (1.0 - o)
        da[3 * h_dim:] = dc * i * (1.0 - cand ** 2)
        dc_next = dc * f
        dh_next = w_rec @ da
    h_prev = np.vstack([zeros[None, :], hidden[:-1]])
    dw_in = x.T @ dgates
    dw_rec = h_prev.T @ dgates
    dbias = dgates.sum(axis=0)
    dx = dgates @ w_in.T if need_input_grad else None
    return dx, dw_in, dw_rec, dbias


def log_input(env, config):
    y = np.log(np.maximum(env, config.env_floor))
    if config.input_norm == "segment":
        y = (y - y.mean()) / max(y.std(), 1e-6)
    return y


def _check_finite(arr, layer, name):
    if not np.all(np.isfinite(arr)):
        raise NumericOverflowError(f"non-finite activation in layer {layer} ({name})", layer=layer)


def forward_log_gain(env, params, config, tape=None):
    """Network output before the exponential, shape (T, Q)."""
    env = env.values if isinstance(env, EnvelopeMatrix) else np.asarray(env, dtype=np.float64)
    if env.ndim != 2 or env.shape[1] != config.num_bands or env.shape[0] < 1:
        raise InvalidArgumentError(
            f"envelope shape {env.shape} does not match (T, {config.num_bands})")
    t, q = env.shape
    a = log_input(env, config)[None, :, :]
    if tape is not None:
        tape.clear()
        tape.shape = (t, q)
    layer = 0
    for i in range(len(config.conv_layers)):
        z = conv_forward(a, params[f"conv{i}.weight"], params[f"conv{i}.bias"])
        out = np.maximum(z, 0.0)
        _check_finite(out, layer, f"conv{i}")
        if tape is not None:
            tape.conv.append((a, z > 0))
        a = out
        layer += 1
    seq = a.transpose(1, 0, 2).reshape(t, -1)
    for j in range(len(config.lstm_sizes)):
        hidden, cache = lstm_forward(seq, params[f"lstm{j}.w_in"], params[f"lstm{j}.w_rec"],
                                     params[f"lstm{j}.bias"])
        _check_finite(hidden, layer, f"lstm{j}")
        if tape is not None:
            tape.lstm.append((seq, hidden, cache))
        seq = hidden
        layer += 1
    if tape is not None:
        tape.filled = True
    return config.output_scale * seq


def forward(env, params, config, tape=None):
    """Predicted gain matrix, strictly positive."""
    return GainMatrix(np.exp(forward_log_gain(env, params, config, tape)))


def backward(tape, params, config, dlog_gain):
    """Gradients of a scalar loss w.r.t. every parameter, given its gradient
    w.r.t. the log-gain output recorded in ``tape``."""
    if tape is None or not tape.filled:
        raise ContractViolationError("backward called without a forward tape")
    dlog_gain = np.asarray(dlog_gain, dtype=np.float64)
    if dlog_gain.shape != tape.shape:
        raise InvalidArgumentError(f"gradient shape {dlog_gain.shape} != output {tape.shape}")
    t, q = tape.shape
    grads = {}
    dseq = config.output_scale * dlog_gain
    n_lstm = len(tape.lstm)
    for j in range(n_lstm - 1, -1, -1):
        seq, hidden, cache = tape.lstm[j]
        need = j > 0 or len(tape.conv) > 0
        dseq, dw_in, dw_rec, dbias = lstm_backward(
            seq, params[f"lstm{j}.w_in"], params[f"lstm{j}.w_rec"], hidden, cache, dseq, need)
        grads[f"lstm{j}.w_in"] = dw_in
        grads[f"lstm{j}.w_rec"] = dw_rec
        grads[f"lstm{j}.bias"] = dbias
    if tape.conv:
        cout = config.conv_layers[-1][0]
        da = dseq.reshape(t, cout, q).transpose(1, 0, 2)
        for i in range(len(tape.conv) - 1, -1, -1):
            a_in, mask = tape.conv[i]
            dz = da * mask
            da, dw, db = conv_backward(a_in, params[f"conv{i}.weight"], dz, need_input_grad=i > 0)
            grads[f"conv{i}.weight"] = dw
            grads[f"conv{i}.bias"] = db
    return grads


def enhance(env, params, config):
    """Reverberant envelopes times the predicted gain."""
    if not isinstance(env, EnvelopeMatrix):
        env = EnvelopeMatrix(env)
    return apply_gain(env, forward(env, params, config))
