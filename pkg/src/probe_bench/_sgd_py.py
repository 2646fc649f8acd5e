"""Pure-numpy SGD kernel; fallback when the compiled extension is absent.

Same contract as probe_bench._sgd.run_sgd. The two backends perform the same
update arithmetic but accumulate dot products in different orders (BLAS here,
sequential loops there), so their results agree to rounding error, not bit
for bit. Each backend on its own is fully deterministic.
"""

import numpy as np

BACKEND = "python"


def run_sgd(X, y, W, b, lr, wd, batch_size, perms, epoch_losses):
    """Run all SGD epochs in place; return (epoch, batch) of the first
    non-finite parameter state, or (-1, -1) if training stayed finite.

    epoch_losses[e] receives the epoch's mean objective: per-example softmax
    cross-entropy averaged over the epoch plus the batch-size-weighted mean of
    the (wd/2)*||W||^2 term evaluated at each batch's pre-update weights.
    """
    n = X.shape[0]
    epochs = perms.shape[0]
    for e in range(epochs):
        perm = perms[e]
        loss_accum = 0.0
        for bi, start in enumerate(range(0, n, batch_size)):
            idx = perm[start : start + batch_size]
            B = idx.shape[0]
            Xb = X[idx]
            yb = y[idx]
            logits = Xb @ W.T + b
            m = logits.max(axis=1, keepdims=True)
            lse = m + np.log(np.exp(logits - m).sum(axis=1, keepdims=True))
            ce = float((lse[:, 0] - logits[np.arange(B), yb]).sum())
            P = np.exp(logits - lse)
            P[np.arange(B), yb] -= 1.0
            gW = P.T @ Xb
            gb = P.sum(axis=0)
            w2 = float((W * W).sum())
            loss_accum += ce + B * 0.5 * wd * w2
            W -= lr * (gW / B + wd * W)
            b -= lr * (gb / B)
            if not (np.isfinite(W).all() and np.isfinite(b).all()):
                epoch_losses[e] = loss_accum / n
                return e, bi
        epoch_losses[e] = loss_accum / n
    return -1, -1
