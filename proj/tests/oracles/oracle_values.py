# Copyright 2026 The pglab Authors
# SPDX-License-Identifier: Apache-2.0
"""Independent reference values frozen into the C++ unit tests.

Run with python3 (numpy, scipy). Every number printed here appears verbatim in
tests/unit; rerun after changing any of the inputs below.
"""

import numpy as np
from scipy import stats


def gauss_eps(components, x, sigma):
    """-sigma * grad log sum_k w_k N(x; mu_k, S_k + sigma^2 I)."""
    logs, grads = [], []
    for w, mu, cov in components:
        c = np.asarray(cov) + sigma**2 * np.eye(2)
        ci = np.linalg.inv(c)
        d = x - np.asarray(mu)
        logs.append(np.log(w) - 0.5 * d @ ci @ d - 0.5 * np.log(np.linalg.det(2 * np.pi * c)))
        grads.append(-ci @ d)
    logs = np.array(logs)
    r = np.exp(logs - logs.max())
    r /= r.sum()
    return -sigma * sum(ri * g for ri, g in zip(r, grads))


def guided_oracle():
    # Pretrain: two generic concepts at the base attribute. Target: concept 2.
    pre = [((0, 0), 0.5, (-2.0, 0.0), np.eye(2)), ((1, 0), 0.5, (2.0, 0.0), np.eye(2))]
    tgt = [((2, 0), 1.0, (0.0, -3.0), 0.5 * np.eye(2))]
    adapted = [(c, 1.0 / 3.0, m, s) for c, _, m, s in pre + tgt]
    x = np.array([0.5, -1.0])
    sigma, lam = 1.0, 3.0
    cond = (2, 0)

    def eps(spec, c):
        comps = [(w, m, s) for cc, w, m, s in spec if c is None or cc == c]
        return gauss_eps(comps, x, sigma)

    strong = eps(adapted, cond)
    weak_cfg = eps(adapted, None)
    # The pretrained oracle has no component for the target concept; it
    # answers with its unconditional estimate.
    weak_ag = eps(pre, None)
    base_null = eps(pre, None)
    out = {}
    out["strong"] = strong
    out["cfg"] = weak_cfg + lam * (strong - weak_cfg)
    out["ag"] = weak_ag + lam * (strong - weak_ag)
    for w in (0.0, 0.5):
        weak = w * weak_cfg + (1 - w) * base_null
        out[f"pg_{w}"] = weak + lam * (strong - weak)
    return out


def edm_levels(n, smax, smin, rho):
    i = np.arange(n + 1)
    return (smax ** (1 / rho) + i / n * (smin ** (1 / rho) - smax ** (1 / rho))) ** rho


def main():
    np.set_printoptions(precision=17)
    for k, v in guided_oracle().items():
        print(f"oracle_guided {k}: {v[0]:.17g} {v[1]:.17g}")

    lv = edm_levels(50, 10.0, 0.01, 7.0)
    for i in (1, 10, 25, 49):
        print(f"edm rho=7 n=50 level[{i}] = {lv[i]:.17g}")

    cov_t = np.array([[0.35, 0.1], [0.1, 0.3]])
    shift = np.array([0.0, 4.0])
    delta = np.sqrt(shift @ np.linalg.inv(cov_t) @ shift)
    print(f"attribute Mahalanobis separation = {delta:.17g}")
    print(f"Bayes misclassification rate Phi(-delta/2) = {stats.norm.cdf(-delta / 2):.17g}")

    entropy_term = -(1 + np.log(2 * np.pi)) - 0.5 * np.log(np.linalg.det(cov_t))
    print(f"expected log-likelihood under target = {entropy_term:.17g}")

    target_mean = np.array([0.0, -3.0])
    pre_means = [np.array(m) for m in ([-3, 0], [3, 0], [-3, 4], [3, 4])]
    d_pre = min(np.sqrt((target_mean - m) @ (target_mean - m)) for m in pre_means)
    d_tgt = min(np.sqrt((target_mean - m) @ np.linalg.inv(cov_t) @ (target_mean - m)) for m in pre_means)
    print(f"min Mahalanobis target mean to pretrain means (pretrain cov) = {d_pre:.17g}")
    print(f"min Mahalanobis target mean to pretrain means (target cov) = {d_tgt:.17g}")

    x = [1.0, 2.0, 2.0, 3.0, 5.0, 4.0]
    y = [2.0, 1.0, 4.0, 4.0, 6.0, 6.0]
    print(f"spearman ties = {stats.spearmanr(x, y).correlation:.17g}")
    print(f"spearman reversed = {stats.spearmanr([1, 2, 3, 4], [8, 6, 4, 1]).correlation:.17g}")

    # Adam, first step from a fresh state: m = (1-b1) g, v = (1-b2) g^2, then
    # bias correction divides by (1-b1) and (1-b2).
    g = np.array([0.3, -2.0, 1e-9])
    lr, b1, b2, eps = 0.01, 0.9, 0.999, 1e-8
    m = (1 - b1) * g / (1 - b1)
    v = (1 - b2) * g * g / (1 - b2)
    step = -lr * m / (np.sqrt(v) + eps)
    print("adam first step = " + " ".join(f"{s:.17g}" for s in step))

    feat = 2 + 1 + 8 + (3 + 2 + 1)
    count = feat * 64 + 64 + 64 * 64 + 64 + 64 * 2 + 2
    print(f"default parameter count = {count}")


if __name__ == "__main__":
    main()
