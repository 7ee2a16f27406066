# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for logistic regression and boosted stumps.

Mirrors ``hect._fallback`` function for function; see that module for the
reference semantics.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p, fabs, sqrt

cnp.import_array()


cdef inline double _softplus(double z) nogil:
    if z > 0:
        return z + log1p(exp(-z))
    return log1p(exp(z))


cdef inline double _sigmoid(double z) nogil:
    cdef double e
    if z >= 0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


cdef double _loss_grad(const double[:, ::1] X, const double[::1] y,
                       const double[::1] w, double sw, double[::1] beta,
                       double lam, double[::1] grad, double[::1] z,
                       bint want_loss=True) nogil:
    # beta[:d] coefficients, beta[d] intercept; returns loss, fills grad
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], i, j
    cdef double acc, r, loss = 0.0
    for j in range(d + 1):
        grad[j] = 0.0
    for i in range(n):
        acc = beta[d]
        for j in range(d):
            acc += X[i, j] * beta[j]
        z[i] = acc
        if want_loss:
            loss += w[i] * (_softplus(acc) - y[i] * acc)
        r = w[i] * (_sigmoid(acc) - y[i]) / sw
        for j in range(d):
            grad[j] += r * X[i, j]
        grad[d] += r
    loss /= sw
    acc = 0.0
    for j in range(d):
        acc += beta[j] * beta[j]
        grad[j] += lam * beta[j]
    return loss + 0.5 * lam * acc


cdef double _lipschitz(const double[:, ::1] X, const double[::1] w, double sw,
                       int n_power):
    # largest eigenvalue of [X 1]' W [X 1] / sw by power iteration, from ones
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], i, j
    cdef int it
    cdef double acc, norm, lam_max = 0.0
    cdef double[::1] v = np.full(d + 1, 1.0 / sqrt(d + 1.0))
    cdef double[::1] u = np.empty(d + 1)
    for it in range(n_power):
        for j in range(d + 1):
            u[j] = 0.0
        for i in range(n):
            acc = v[d]
            for j in range(d):
                acc += X[i, j] * v[j]
            acc *= w[i] / sw
            for j in range(d):
                u[j] += acc * X[i, j]
            u[d] += acc
        norm = 0.0
        for j in range(d + 1):
            norm += u[j] * u[j]
        norm = sqrt(norm)
        lam_max = norm
        if norm == 0.0:
            break
        for j in range(d + 1):
            v[j] = u[j] / norm
    return lam_max


def logistic_loss_grad(const double[:, ::1] X, const double[::1] y,
                       const double[::1] w, coef, double bias, double lam):
    cdef Py_ssize_t d = X.shape[1]
    cdef double sw = 0.0
    cdef Py_ssize_t i
    for i in range(X.shape[0]):
        sw += w[i]
    beta = np.empty(d + 1)
    beta[:d] = coef
    beta[d] = bias
    grad = np.empty(d + 1)
    z = np.empty(X.shape[0])
    loss = _loss_grad(X, y, w, sw, beta, lam, grad, z)
    return loss, grad[:d].copy(), float(grad[d])


def logistic_fit(const double[:, ::1] X, const double[::1] y, const double[::1] w,
                 double lam, int max_iters, double tol):
    """Nesterov-accelerated full-batch gradient descent from zero weights."""
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], i, j
    cdef double sw = 0.0, step, gmax, mom, dot, loss
    cdef int it, n_iter = 0, k = 1
    for i in range(n):
        sw += w[i]
    step = 1.0 / (0.25 * 1.1 * _lipschitz(X, w, sw, 15) + lam)

    cdef double[::1] x = np.zeros(d + 1)
    cdef double[::1] x_prev = np.zeros(d + 1)
    cdef double[::1] yv = np.zeros(d + 1)
    cdef double[::1] x_new = np.zeros(d + 1)
    cdef double[::1] g = np.zeros(d + 1)
    cdef double[::1] z = np.zeros(n)

    with nogil:
        for it in range(max_iters):
            n_iter = it + 1
            mom = (k - 1.0) / (k + 2.0)
            for j in range(d + 1):
                yv[j] = x[j] + mom * (x[j] - x_prev[j])
            _loss_grad(X, y, w, sw, yv, lam, g, z, False)
            gmax = 0.0
            for j in range(d + 1):
                if fabs(g[j]) > gmax:
                    gmax = fabs(g[j])
            if gmax < tol:
                for j in range(d + 1):
                    x[j] = yv[j]
                break
            dot = 0.0
            for j in range(d + 1):
                x_new[j] = yv[j] - step * g[j]
                dot += g[j] * (x_new[j] - x[j])
            if dot > 0.0:
                k = 1
            else:
                k += 1
            for j in range(d + 1):
                x_prev[j] = x[j]
                x[j] = x_new[j]
        loss = _loss_grad(X, y, w, sw, x, lam, g, z)
    coef = np.asarray(x)[:d].copy()
    return coef, float(x[d]), n_iter, loss


def logistic_decision(const double[:, ::1] X, const double[::1] coef, double bias):
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], i, j
    cdef double acc
    out = np.empty(n)
    cdef double[::1] o = out
    for i in range(n):
        acc = bias
        for j in range(d):
            acc += X[i, j] * coef[j]
        o[i] = acc
    return out


cdef double _weighted_loss(const double[::1] F, const double[::1] y,
                           const double[::1] w) nogil:
    cdef Py_ssize_t i, n = F.shape[0]
    cdef double acc = 0.0
    for i in range(n):
        acc += w[i] * (_softplus(F[i]) - y[i] * F[i])
    return acc / n


def stumps_fit(const double[:, ::1] X, const cnp.int64_t[:, ::1] order,
               const double[::1] y, const double[::1] w_in, int n_rounds,
               double lr, double reg):
    """Depth-1 Newton boosting on logistic loss with loss backtracking.

    ``order[j]`` is a stable argsort of column ``j``.  Returns split features
    (-1 for a constant stump), thresholds, left/right leaf values, the initial
    log-odds and the training loss after each round (index 0 = initial).
    """
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], i, j, kk, best_j, best_k
    cdef int r, tries
    cdef double sw = 0.0, prior, init, p, G, H, GL, HL, GR, HR, gain, best, base
    cdef double vL, vR, thr, xa, xb, cur_loss, new_loss, scale
    for i in range(n):
        sw += w_in[i]
    w_arr = np.empty(n)
    cdef double[::1] w = w_arr
    prior = 0.0
    for i in range(n):
        w[i] = w_in[i] * n / sw
        prior += w[i] * y[i]
    prior /= n
    prior = min(max(prior, 1e-6), 1.0 - 1e-6)
    init = log(prior / (1.0 - prior))

    feat = np.full(n_rounds, -1, dtype=np.int64)
    thrs = np.zeros(n_rounds)
    left = np.zeros(n_rounds)
    right = np.zeros(n_rounds)
    losses = np.zeros(n_rounds + 1)
    cdef cnp.int64_t[::1] feat_v = feat
    cdef double[::1] thr_v = thrs, left_v = left, right_v = right, loss_v = losses
    cdef double[::1] F = np.full(n, init)
    cdef double[::1] Fn = np.empty(n)
    cdef double[::1] g = np.empty(n)
    cdef double[::1] h = np.empty(n)
    cdef cnp.int8_t[::1] goes_left = np.empty(n, dtype=np.int8)
    # sorted column values and "a split may follow position k" flags
    cdef double[:, ::1] xs = np.empty((d, n))
    cdef cnp.int8_t[:, ::1] can_split = np.zeros((d, n), dtype=np.int8)
    for j in range(d):
        for kk in range(n):
            xs[j, kk] = X[order[j, kk], j]
        for kk in range(n - 1):
            can_split[j, kk] = xs[j, kk + 1] > xs[j, kk]

    with nogil:
        cur_loss = _weighted_loss(F, y, w)
        loss_v[0] = cur_loss
        for r in range(n_rounds):
            G = 0.0
            H = 0.0
            for i in range(n):
                p = _sigmoid(F[i])
                g[i] = w[i] * (p - y[i])
                h[i] = w[i] * p * (1.0 - p)
                G += g[i]
                H += h[i]
            best = -1.0
            best_j = -1
            best_k = -1
            for j in range(d):
                GL = 0.0
                HL = 0.0
                for kk in range(n - 1):
                    i = order[j, kk]
                    GL += g[i]
                    HL += h[i]
                    if can_split[j, kk]:
                        GR = G - GL
                        HR = H - HL
                        gain = GL * GL / (HL + reg) + GR * GR / (HR + reg)
                        if gain > best:
                            best = gain
                            best_j = j
                            best_k = kk
            base = G * G / (H + reg)
            if best_j < 0 or best - base <= 0.0:
                best_j = -1
                thr = 0.0
                vL = -G / (H + reg) * lr
                vR = vL
                for i in range(n):
                    goes_left[i] = 1
            else:
                xa = xs[best_j, best_k]
                xb = xs[best_j, best_k + 1]
                thr = 0.5 * (xa + xb)
                if thr >= xb:
                    thr = xa
                GL = 0.0
                HL = 0.0
                for kk in range(best_k + 1):
                    i = order[best_j, kk]
                    GL += g[i]
                    HL += h[i]
                vL = -GL / (HL + reg) * lr
                vR = -(G - GL) / (H - HL + reg) * lr
                for i in range(n):
                    goes_left[i] = X[i, best_j] <= thr
            scale = 1.0
            tries = 0
            while True:
                for i in range(n):
                    Fn[i] = F[i] + scale * (vL if goes_left[i] else vR)
                new_loss = _weighted_loss(Fn, y, w)
                if new_loss <= cur_loss:
                    break
                tries += 1
                if tries > 40:
                    scale = 0.0
                    for i in range(n):
                        Fn[i] = F[i]
                    new_loss = cur_loss
                    break
                scale *= 0.5
            feat_v[r] = best_j
            thr_v[r] = thr
            left_v[r] = scale * vL
            right_v[r] = scale * vR
            for i in range(n):
                F[i] = Fn[i]
            cur_loss = new_loss
            loss_v[r + 1] = cur_loss
    return feat, thrs, left, right, float(init), losses


def stumps_decision(const double[:, ::1] X, const cnp.int64_t[::1] feat,
                    const double[::1] thr, const double[::1] left,
                    const double[::1] right, double init):
    cdef Py_ssize_t n = X.shape[0], r, i, nr = feat.shape[0]
    out = np.full(n, init)
    cdef double[::1] o = out
    for r in range(nr):
        if feat[r] < 0:
            for i in range(n):
                o[i] += left[r]
        else:
            for i in range(n):
                o[i] += left[r] if X[i, feat[r]] <= thr[r] else right[r]
    return out
