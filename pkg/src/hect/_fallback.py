"""Pure-numpy kernels, used when the compiled extension is unavailable.

Same signatures and algorithms as ``hect._kernels``.  Results agree with the
compiled versions up to floating-point summation order.
"""
import numpy as np


def _softplus(z):
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _loss_grad(X, y, w, sw, beta, lam):
    d = X.shape[1]
    z = X @ beta[:d] + beta[d]
    loss = np.dot(w, _softplus(z) - y * z) / sw
    r = w * (_sigmoid(z) - y) / sw
    grad = np.empty(d + 1)
    grad[:d] = X.T @ r + lam * beta[:d]
    grad[d] = r.sum()
    return loss + 0.5 * lam * np.dot(beta[:d], beta[:d]), grad


def _lipschitz(X, w, sw, n_power):
    d = X.shape[1]
    v = np.full(d + 1, 1.0 / np.sqrt(d + 1.0))
    lam_max = 0.0
    for _ in range(n_power):
        a = (X @ v[:d] + v[d]) * w / sw
        u = np.append(X.T @ a, a.sum())
        norm = np.sqrt(np.dot(u, u))
        lam_max = norm
        if norm == 0.0:
            break
        v = u / norm
    return lam_max


def logistic_loss_grad(X, y, w, coef, bias, lam):
    beta = np.append(np.asarray(coef, dtype=np.float64), bias)
    loss, grad = _loss_grad(X, y, w, w.sum(), beta, lam)
    return loss, grad[:-1].copy(), float(grad[-1])


def logistic_fit(X, y, w, lam, max_iters, tol):
    """Nesterov-accelerated full-batch gradient descent from zero weights.

    Fixed step 1/L with L bounded through a power iteration on the weighted
    Gram matrix; momentum restarts whenever the step opposes the gradient.
    Stops once the largest absolute gradient entry drops below ``tol``.
    """
    d = X.shape[1]
    sw = w.sum()
    step = 1.0 / (0.25 * 1.1 * _lipschitz(X, w, sw, 15) + lam)
    x = np.zeros(d + 1)
    x_prev = x.copy()
    k = 1
    n_iter = 0
    for it in range(max_iters):
        n_iter = it + 1
        yv = x + (k - 1.0) / (k + 2.0) * (x - x_prev)
        _, g = _loss_grad(X, y, w, sw, yv, lam)
        if np.max(np.abs(g)) < tol:
            x = yv
            break
        x_new = yv - step * g
        k = 1 if np.dot(g, x_new - x) > 0.0 else k + 1
        x_prev, x = x, x_new
    loss, _ = _loss_grad(X, y, w, sw, x, lam)
    return x[:d].copy(), float(x[d]), n_iter, float(loss)


def logistic_decision(X, coef, bias):
    return X @ coef + bias


def _weighted_loss(F, y, w):
    return np.dot(w, _softplus(F) - y * F) / F.shape[0]


def stumps_fit(X, order, y, w_in, n_rounds, lr, reg):
    """Depth-1 Newton boosting on logistic loss.

    Each round picks the (feature, threshold) maximising the second-order
    gain ``GL^2/(HL+reg) + GR^2/(HR+reg)`` over midpoints between distinct
    sorted values, ties resolved towards the lowest feature and position.
    Leaf values are shrunken Newton steps; if the round would raise the
    training loss the step is halved until it does not.
    """
    n, d = X.shape
    w = w_in * n / w_in.sum()
    prior = min(max(np.dot(w, y) / n, 1e-6), 1.0 - 1e-6)
    init = float(np.log(prior / (1.0 - prior)))

    cols = np.arange(d)[:, None]
    xs = X[order, cols]                      # (d, n) sorted columns
    distinct = xs[:, 1:] > xs[:, :-1]        # split allowed after position k

    feat = np.full(n_rounds, -1, dtype=np.int64)
    thrs = np.zeros(n_rounds)
    left = np.zeros(n_rounds)
    right = np.zeros(n_rounds)
    losses = np.zeros(n_rounds + 1)
    F = np.full(n, init)
    cur_loss = _weighted_loss(F, y, w)
    losses[0] = cur_loss
    for r in range(n_rounds):
        p = _sigmoid(F)
        g = w * (p - y)
        h = w * p * (1.0 - p)
        G = g.sum()
        H = h.sum()
        GL = np.cumsum(g[order], axis=1)[:, :-1]
        HL = np.cumsum(h[order], axis=1)[:, :-1]
        gain = GL * GL / (HL + reg) + (G - GL) ** 2 / (H - HL + reg)
        gain = np.where(distinct, gain, -np.inf)
        flat = int(np.argmax(gain)) if gain.size else 0
        best = gain.flat[flat] if gain.size else -np.inf
        if not np.isfinite(best) or best - G * G / (H + reg) <= 0.0:
            j = -1
            thr = 0.0
            vL = vR = -G / (H + reg) * lr
            goes_left = np.ones(n, dtype=bool)
        else:
            j, k = divmod(flat, n - 1)
            xa, xb = xs[j, k], xs[j, k + 1]
            thr = 0.5 * (xa + xb)
            if thr >= xb:
                thr = xa
            vL = -GL[j, k] / (HL[j, k] + reg) * lr
            vR = -(G - GL[j, k]) / (H - HL[j, k] + reg) * lr
            goes_left = X[:, j] <= thr
        step = np.where(goes_left, vL, vR)
        scale = 1.0
        for _ in range(41):
            Fn = F + scale * step
            new_loss = _weighted_loss(Fn, y, w)
            if new_loss <= cur_loss:
                break
            scale *= 0.5
        else:
            scale, Fn, new_loss = 0.0, F, cur_loss
        feat[r] = j
        thrs[r] = thr
        left[r] = scale * vL
        right[r] = scale * vR
        F = Fn
        cur_loss = new_loss
        losses[r + 1] = cur_loss
    return feat, thrs, left, right, init, losses


def stumps_decision(X, feat, thr, left, right, init):
    out = np.full(X.shape[0], init)
    for r in range(feat.shape[0]):
        if feat[r] < 0:
            out += left[r]
        else:
            out += np.where(X[:, feat[r]] <= thr[r], left[r], right[r])
    return out
