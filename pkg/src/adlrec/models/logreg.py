"""Multinomial softmax regression with class-weighted cross-entropy.

Objective: sum_i s_i * (-log p_{i, y_i}) + (l2 / 2) * ||W||^2, bias
unpenalized, s_i the balanced weight of sample i's class. Optimized by
full-batch gradient descent with an Armijo backtracking line search from a
zero initialization, so training is deterministic.
"""

from dataclasses import dataclass

import numpy as np

DEFAULTS = {"l2": 1.0, "max_iter": 1000, "grad_tol": 1e-4}


@dataclass
class LogisticModel:
    weights: np.ndarray  # (d, K)
    bias: np.ndarray  # (K,)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(X @ self.weights + self.bias)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    # sorted reduction: the normalizer is a function of the value multiset,
    # so permuting class columns permutes probabilities bit-exactly
    norm = np.sort(expz, axis=1).sum(axis=1, keepdims=True)
    return expz / norm


def loss_and_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Weighted cross-entropy + ridge penalty, with analytic gradients."""
    logits = X @ weights + bias
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    log_proba = shifted - log_norm[:, None]
    n = X.shape[0]
    loss = -(sample_weight * log_proba[np.arange(n), y]).sum()
    loss += 0.5 * l2 * float((weights**2).sum())

    proba = np.exp(log_proba)
    delta = proba.copy()
    delta[np.arange(n), y] -= 1.0
    delta *= sample_weight[:, None]
    grad_w = X.T @ delta + l2 * weights
    grad_b = delta.sum(axis=0)
    return float(loss), grad_w, grad_b


def fit_logreg(
    X: np.ndarray,
    y: np.ndarray,
    class_weight: np.ndarray,
    hp: dict,
) -> tuple[LogisticModel, dict]:
    n, d = X.shape
    n_classes = len(class_weight)
    sample_weight = class_weight[y]
    weights = np.zeros((d, n_classes))
    bias = np.zeros(n_classes)
    l2 = float(hp["l2"])
    grad_tol = float(hp["grad_tol"])
    max_iter = int(hp["max_iter"])

    loss, grad_w, grad_b = loss_and_grad(weights, bias, X, y, sample_weight, l2)
    step = 1.0
    reason = "max-iterations"
    iterations = max_iter
    for iteration in range(max_iter):
        grad_norm = max(np.abs(grad_w).max(initial=0.0), np.abs(grad_b).max(initial=0.0))
        if grad_norm < grad_tol:
            reason = "converged"
            iterations = iteration
            break
        # Armijo backtracking along the negative gradient
        sq = float((grad_w**2).sum() + (grad_b**2).sum())
        step = min(step * 2.0, 1e6)
        while True:
            cand_w = weights - step * grad_w
            cand_b = bias - step * grad_b
            cand_loss, cand_gw, cand_gb = loss_and_grad(
                cand_w, cand_b, X, y, sample_weight, l2
            )
            if cand_loss <= loss - 1e-4 * step * sq:
                break
            step *= 0.5
            if step < 1e-16:
                break
        if step < 1e-16:
            reason = "converged"  # no descent representable: stationary in float
            iterations = iteration
            break
        weights, bias = cand_w, cand_b
        loss, grad_w, grad_b = cand_loss, cand_gw, cand_gb

    meta = {"iterations": iterations, "stopping_reason": reason, "final_loss": loss}
    return LogisticModel(weights=weights, bias=bias), meta
