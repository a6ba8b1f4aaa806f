"""Small dense Levenberg-Marquardt solver with a fixed iteration budget."""

import numpy as np


def levenberg_marquardt(model, y, p0, max_iter=10, damping=1e-3):
    """Minimize ``||y - f(p)||^2``.

    ``model(p, jacobian)`` returns ``f`` when ``jacobian`` is false and
    ``(f, J)`` otherwise.  Every trial step counts as one iteration, so at most
    ``max_iter + 1`` Jacobians are formed.  Returns ``(p, sse)``; rejected or
    non-finite trials leave ``p`` unchanged.
    """
    p = np.array(p0, dtype=float)
    with np.errstate(all="ignore"):
        f, J = model(p, True)
        res = y - f
        sse = float(res @ res)
        if not np.isfinite(sse) or not np.all(np.isfinite(J)):
            return p, np.inf
        mu = damping
        JtJ, g = J.T @ J, J.T @ res
        for _ in range(max_iter):
            if sse == 0.0:
                break
            diag = np.diag(JtJ).copy()
            diag[diag <= 0] = 1.0
            try:
                step = np.linalg.solve(JtJ + mu * np.diag(diag), g)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            trial = p + step
            f_new = model(trial, False)
            res_new = y - f_new
            sse_new = float(res_new @ res_new)
            if np.isfinite(sse_new) and sse_new < sse:
                small = sse - sse_new <= 1e-15 * sse
                p, sse = trial, sse_new
                mu = max(mu / 3.0, 1e-12)
                if small:
                    break
                f, J = model(p, True)
                if not np.all(np.isfinite(J)):
                    break
                res = y - f
                JtJ, g = J.T @ J, J.T @ res
            else:
                mu *= 4.0
    return p, sse
