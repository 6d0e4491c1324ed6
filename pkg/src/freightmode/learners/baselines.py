"""Non-tree reference learners: multinomial logistic, naive Bayes, k-NN."""
from __future__ import annotations

import numpy as np

from ..errors import InvalidK
from .boosting import softmax
from .tree import Classifier, check_X, check_Xy


class Standardizer:
    def fit(self, X):
        self.mean_ = X.mean(axis=0)
        sd = X.std(axis=0)
        self.scale_ = np.where(sd > 0, sd, 1.0)
        return self

    def transform(self, X):
        return (X - self.mean_) / self.scale_


class LogisticRegression(Classifier):
    """Softmax regression on z-scored inputs, full-batch gradient descent with L2."""

    kind = "LR"

    def __init__(self, l2=1e-4, step=0.5, max_iter=2000, tol=1e-6):
        self.l2 = l2
        self.step = step
        self.max_iter = max_iter
        self.tol = tol

    def get_params(self):
        return {"l2": self.l2, "step": self.step, "max_iter": self.max_iter, "tol": self.tol}

    def fit(self, X, y, presorted=None):
        X, y = check_Xy(X, y)
        n, self.n_features_ = X.shape
        self.scaler_ = Standardizer().fit(X)
        Z = np.hstack([self.scaler_.transform(X), np.ones((n, 1))])
        K = self.n_classes
        Y = np.zeros((n, K))
        Y[np.arange(n), y] = 1.0
        W = np.zeros((Z.shape[1], K))
        penalty = np.ones((Z.shape[1], 1))
        penalty[-1] = 0.0  # bias is not shrunk
        self.n_iter_ = 0
        for it in range(self.max_iter):
            grad = Z.T @ (softmax(Z @ W) - Y) / n + self.l2 * penalty * W
            W -= self.step * grad
            self.n_iter_ = it + 1
            if np.abs(grad).max() < self.tol:
                break
        self.coef_ = W
        return self

    def predict_proba(self, X):
        X = check_X(X, self.n_features_)
        Z = np.hstack([self.scaler_.transform(X), np.ones((X.shape[0], 1))])
        return softmax(Z @ self.coef_)


class NaiveBayes(Classifier):
    """Gaussian likelihoods for numeric columns, Bernoulli for 0/1 columns.

    Bernoulli rates use Laplace smoothing ``alpha``. Classes absent from the
    training labels get zero probability.
    """

    kind = "NB"

    def __init__(self, alpha=1.0, var_smoothing=1e-9, binary_columns=None):
        self.alpha = alpha
        self.var_smoothing = var_smoothing
        self.binary_columns = binary_columns

    def get_params(self):
        return {"alpha": self.alpha, "var_smoothing": self.var_smoothing}

    def fit(self, X, y, presorted=None):
        X, y = check_Xy(X, y)
        n, self.n_features_ = X.shape
        K = self.n_classes
        if self.binary_columns is None:
            binary = np.all((X == 0) | (X == 1), axis=0)
        else:
            binary = np.zeros(self.n_features_, dtype=bool)
            binary[list(self.binary_columns)] = True
        self.binary_ = binary
        counts = np.bincount(y, minlength=K).astype(np.float64)
        self.present_ = counts > 0
        self.log_prior_ = np.full(K, -np.inf)
        self.log_prior_[self.present_] = np.log(counts[self.present_] / n)
        eps = self.var_smoothing * max(float(X[:, ~binary].var(axis=0).max()) if (~binary).any() else 1.0, 1e-300)
        self.mu_ = np.zeros((K, self.n_features_))
        self.var_ = np.ones((K, self.n_features_))
        self.rate_ = np.full((K, self.n_features_), 0.5)
        for k in np.flatnonzero(self.present_):
            Xk = X[y == k]
            self.mu_[k] = Xk.mean(axis=0)
            self.var_[k] = Xk.var(axis=0) + eps
            self.rate_[k] = (Xk.sum(axis=0) + self.alpha) / (len(Xk) + 2 * self.alpha)
        return self

    def _joint_log_likelihood(self, X):
        b = self.binary_
        ll = np.tile(self.log_prior_, (X.shape[0], 1))
        for k in np.flatnonzero(self.present_):
            if (~b).any():
                mu, var = self.mu_[k, ~b], self.var_[k, ~b]
                ll[:, k] += -0.5 * (np.log(2 * np.pi * var) + (X[:, ~b] - mu) ** 2 / var).sum(axis=1)
            if b.any():
                r = self.rate_[k, b]
                xb = X[:, b]
                ll[:, k] += (xb * np.log(r) + (1 - xb) * np.log1p(-r)).sum(axis=1)
        return ll

    def predict_proba(self, X):
        X = check_X(X, self.n_features_)
        return softmax(self._joint_log_likelihood(X))


class KNearest(Classifier):
    """Class shares among the k nearest training rows (Euclidean, z-scored)."""

    kind = "KNN"

    def __init__(self, k=15, chunk=512):
        self.k = k
        self.chunk = chunk

    def get_params(self):
        return {"k": self.k}

    def fit(self, X, y, presorted=None):
        X, y = check_Xy(X, y)
        if self.k < 1 or self.k > len(y):
            raise InvalidK(f"k={self.k} invalid for {len(y)} training rows")
        self.n_features_ = X.shape[1]
        self.scaler_ = Standardizer().fit(X)
        self.X_ = self.scaler_.transform(X)
        self.y_ = y
        self.sq_ = (self.X_ ** 2).sum(axis=1)
        return self

    def predict_proba(self, X):
        X = self.scaler_.transform(check_X(X, self.n_features_))
        out = np.zeros((X.shape[0], self.n_classes))
        k = self.k
        for s in range(0, X.shape[0], self.chunk):
            Q = X[s:s + self.chunk]
            d = (Q ** 2).sum(axis=1)[:, None] - 2.0 * Q @ self.X_.T + self.sq_[None, :]
            if k < d.shape[1]:
                nn = np.argpartition(d, k - 1, axis=1)[:, :k]
            else:
                nn = np.tile(np.arange(d.shape[1]), (len(Q), 1))
            labels = self.y_[nn]
            for c in range(self.n_classes):
                out[s:s + len(Q), c] = (labels == c).sum(axis=1)
        return out / k


def fit_baseline(kind: str, X, y, params=None):
    params = dict(params or {})
    cls = {"LR": LogisticRegression, "NB": NaiveBayes, "KNN": KNearest}[kind]
    return cls(**params).fit(X, y)
