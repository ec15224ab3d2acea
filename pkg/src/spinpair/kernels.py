"""Hot inner loops.

Every loop-style kernel here is valid numba nopython code. With the JIT active
the public names are the compiled versions; with ``SPINPAIR_NO_JIT=1`` they are
the interpreted loop (for small one-off work) or a vectorised numpy twin (for
the projection loop, which is far too slow interpreted).

Hermitian d x d blocks are stored as real vectors of length d*d: the diagonal,
then sqrt(2)*Re and sqrt(2)*Im of each upper entry in row-major order. The
Euclidean inner product of two such vectors equals the Frobenius inner product
Tr[A B] of the matrices.
"""
import numpy as np

from ._accel import USE_NUMBA, jit

SQRT2 = np.sqrt(2.0)

FEASIBLE = 0
INFEASIBLE_CERT = 1
INFEASIBLE_STALL = 2
MAX_ITER = 3
INCONSISTENT = 4


# ----------------------------------------------------------------------------
# Jacobi eigensolver
# ----------------------------------------------------------------------------

def jacobi_eigh_loop(a, max_sweeps=60):
    """Cyclic complex Jacobi on a Hermitian matrix; eigenvalues ascending."""
    n = a.shape[0]
    A = np.empty((n, n), dtype=np.complex128)
    for r in range(n):
        for c in range(n):
            A[r, c] = a[r, c]
    V = np.zeros((n, n), dtype=np.complex128)
    fro2 = 0.0
    for r in range(n):
        V[r, r] = 1.0
        A[r, r] = A[r, r].real
        for c in range(n):
            fro2 += abs(A[r, c]) ** 2
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += abs(A[p, q]) ** 2
        if off <= 1e-34 * fro2 or off == 0.0:
            break
        for p in range(n):
            for q in range(p + 1, n):
                g = abs(A[p, q])
                if g == 0.0:
                    continue
                app = A[p, p].real
                aqq = A[q, q].real
                if g < 1e-300 or g <= 1e-18 * (abs(app) + abs(aqq)):
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    continue
                e = A[p, q] / g
                theta = (aqq - app) / (2.0 * g)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ec = np.conj(e)
                # A <- A U with U = [[c, s], [-s conj(e), c conj(e)]] on (p, q)
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * ec * akq
                    A[k, q] = s * akp + c * ec * akq
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * ec * vkq
                    V[k, q] = s * vkp + c * ec * vkq
                # A <- U^H A
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * e * aqk
                    A[q, k] = s * apk + c * e * aqk
                A[p, q] = 0.0
                A[q, p] = 0.0
                A[p, p] = app - t * g
                A[q, q] = aqq + t * g
    w = np.empty(n)
    for r in range(n):
        w[r] = A[r, r].real
    order = np.argsort(w)
    w_sorted = np.empty(n)
    V_sorted = np.empty((n, n), dtype=np.complex128)
    for j in range(n):
        w_sorted[j] = w[order[j]]
        for r in range(n):
            V_sorted[r, j] = V[r, order[j]]
    return w_sorted, V_sorted


jacobi_eigh = jit(jacobi_eigh_loop)


def jacobi_eigh_batch_loop(mats):
    m = mats.shape[0]
    n = mats.shape[1]
    ws = np.empty((m, n))
    vs = np.empty((m, n, n), dtype=np.complex128)
    for i in range(m):
        w, v = jacobi_eigh(mats[i])
        ws[i] = w
        vs[i] = v
    return ws, vs


jacobi_eigh_batch = jit(jacobi_eigh_batch_loop)


# ----------------------------------------------------------------------------
# Real <-> Hermitian packing
# ----------------------------------------------------------------------------

def unpack_block_loop(v, d):
    H = np.zeros((d, d), dtype=np.complex128)
    for r in range(d):
        H[r, r] = v[r]
    pos = d
    for r in range(d):
        for c in range(r + 1, d):
            z = (v[pos] + 1j * v[pos + 1]) / SQRT2
            H[r, c] = z
            H[c, r] = np.conj(z)
            pos += 2
    return H


def pack_block_loop(H, out):
    d = H.shape[0]
    for r in range(d):
        out[r] = H[r, r].real
    pos = d
    for r in range(d):
        for c in range(r + 1, d):
            # average the two triangles so tiny asymmetries do not leak
            z = 0.5 * (H[r, c] + np.conj(H[c, r]))
            out[pos] = SQRT2 * z.real
            out[pos + 1] = SQRT2 * z.imag
            pos += 2


unpack_block = jit(unpack_block_loop)
pack_block = jit(pack_block_loop)


def _jacobi_inplace(A, V, n):
    """Diagonalise Hermitian A in place (unsorted); V receives the eigenvectors."""
    fro2 = 0.0
    for r in range(n):
        for c in range(n):
            V[r, c] = 0.0
            fro2 += A[r, c].real ** 2 + A[r, c].imag ** 2
        V[r, r] = 1.0
    for sweep in range(60):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += A[p, q].real ** 2 + A[p, q].imag ** 2
        if off <= 1e-34 * fro2 or off == 0.0:
            break
        for p in range(n):
            for q in range(p + 1, n):
                g = abs(A[p, q])
                if g == 0.0:
                    continue
                app = A[p, p].real
                aqq = A[q, q].real
                if g < 1e-300 or g <= 1e-18 * (abs(app) + abs(aqq)):
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    continue
                e = A[p, q] / g
                ec = np.conj(e)
                theta = (aqq - app) / (2.0 * g)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * ec * akq
                    A[k, q] = s * akp + c * ec * akq
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * ec * vkq
                    V[k, q] = s * vkp + c * ec * vkq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * e * aqk
                    A[q, k] = s * apk + c * e * aqk
                A[p, q] = 0.0
                A[q, p] = 0.0
                A[p, p] = app - t * g
                A[q, q] = aqq + t * g


_jacobi_inplace_c = jit(_jacobi_inplace)


def _unpack_into(z, base, d, H):
    for r in range(d):
        H[r, r] = z[base + r]
    pos = base + d
    for r in range(d):
        for c in range(r + 1, d):
            H[r, c] = (z[pos] + 1j * z[pos + 1]) / SQRT2
            H[c, r] = (z[pos] - 1j * z[pos + 1]) / SQRT2
            pos += 2


_unpack_into_c = jit(_unpack_into)


def psd_project_warm_loop(z, d, n_blocks, basis):
    """Clip negative eigenvalues of every block; return the block minima too.

    ``basis[b]`` holds the eigenvectors found for block b on the previous
    call. Jacobi runs on basis^H Z basis, which is nearly diagonal when the
    iterates move slowly, and the basis is updated in place.
    """
    nv = d * d
    out = np.empty_like(z)
    mins = np.empty(n_blocks)
    H = np.empty((d, d), dtype=np.complex128)
    T = np.empty((d, d), dtype=np.complex128)
    R = np.empty((d, d), dtype=np.complex128)
    w = np.empty(d)
    for b in range(n_blocks):
        base = b * nv
        _unpack_into_c(z, base, d, H)
        B = basis[b]
        # T = H B, then H = B^H T
        for r in range(d):
            for c in range(d):
                acc = 0.0 + 0.0j
                for k in range(d):
                    acc += H[r, k] * B[k, c]
                T[r, c] = acc
        for r in range(d):
            for c in range(d):
                acc = 0.0 + 0.0j
                for k in range(d):
                    acc += np.conj(B[k, r]) * T[k, c]
                H[r, c] = acc
        for r in range(d):
            H[r, r] = H[r, r].real
            for c in range(r + 1, d):
                hc = 0.5 * (H[r, c] + np.conj(H[c, r]))
                H[r, c] = hc
                H[c, r] = np.conj(hc)
        _jacobi_inplace_c(H, R, d)
        # new basis = B R
        for r in range(d):
            for c in range(d):
                acc = 0.0 + 0.0j
                for k in range(d):
                    acc += B[r, k] * R[k, c]
                T[r, c] = acc
        for r in range(d):
            for c in range(d):
                B[r, c] = T[r, c]
        wmin = np.inf
        for k in range(d):
            w[k] = H[k, k].real
            if w[k] < wmin:
                wmin = w[k]
        mins[b] = wmin
        for r in range(d):
            acc = 0.0
            for k in range(d):
                if w[k] > 0.0:
                    acc += w[k] * (B[r, k].real ** 2 + B[r, k].imag ** 2)
            out[base + r] = acc
        pos = base + d
        for r in range(d):
            for c in range(r + 1, d):
                acz = 0.0 + 0.0j
                for k in range(d):
                    if w[k] > 0.0:
                        acz += w[k] * B[r, k] * np.conj(B[c, k])
                out[pos] = SQRT2 * acz.real
                out[pos + 1] = SQRT2 * acz.imag
                pos += 2
    return out, mins


psd_project_warm = jit(psd_project_warm_loop)


def identity_bases_loop(d, n_blocks):
    basis = np.zeros((n_blocks, d, d), dtype=np.complex128)
    for b in range(n_blocks):
        for r in range(d):
            basis[b, r, r] = 1.0
    return basis


identity_bases = jit(identity_bases_loop)


def psd_project_loop(z, d, n_blocks):
    """Cold-start projection onto the PSD cones."""
    return psd_project_warm(z, d, n_blocks, identity_bases(d, n_blocks))


psd_project = jit(psd_project_loop)


def block_max_eig_loop(z, d, n_blocks):
    nv = d * d
    H = np.empty((d, d), dtype=np.complex128)
    V = np.empty((d, d), dtype=np.complex128)
    best = -np.inf
    for b in range(n_blocks):
        _unpack_into_c(z, b * nv, d, H)
        _jacobi_inplace_c(H, V, d)
        for k in range(d):
            if H[k, k].real > best:
                best = H[k, k].real
    return best


block_max_eig = jit(block_max_eig_loop)


# ----------------------------------------------------------------------------
# Dykstra alternating projections (affine subspace x product of PSD cones)
# ----------------------------------------------------------------------------

def dykstra_loop(Q, shift, C, b, x0, d, n_blocks, tol, max_iter,
                 check_every, stall_window, stall_rtol):
    """Alternate between {x : C x = b} and the PSD cones.

    ``Q`` projects onto the null space of ``C`` and ``shift`` is the minimum
    norm solution, so the affine projection is ``Q @ x + shift``. Returns
    ``(x, status, iterations, residual, certificate_margin)`` where ``x`` is
    always exactly PSD blockwise.

    Infeasibility is certified when the row-space part ``g`` of the gap
    between the two iterates satisfies <g, a> > d * max(lambda_max(g), 0):
    <g, a> is constant on the affine set, while on PSD points whose blocks sum
    to the identity it is bounded by the right-hand side.
    """
    x = x0.copy()
    q = np.zeros_like(x)
    basis = identity_bases(d, n_blocks)
    residual = np.inf
    margin = -np.inf
    last_window_res = np.inf
    for it in range(1, max_iter + 1):
        y = Q @ x + shift
        zq = y + q
        x, _ = psd_project_warm(zq, d, n_blocks, basis)
        q = zq - x
        if it % check_every == 0 or it == max_iter:
            res_vec = C @ x - b
            residual = np.max(np.abs(res_vec))
            if residual < tol:
                return x, FEASIBLE, it, residual, margin
            h = y - x
            g = h - Q @ h
            gnorm = np.sqrt(np.dot(g, g))
            if gnorm > 0.0:
                lhs = np.dot(g, shift)
                lmax = block_max_eig(g, d, n_blocks)
                if lmax < 0.0:
                    lmax = 0.0
                margin = lhs - d * lmax
                slack = 1e-12 * gnorm * (np.sqrt(np.dot(shift, shift)) + d)
                if margin > slack:
                    return x, INFEASIBLE_CERT, it, residual, margin
            if it % stall_window == 0:
                if last_window_res < np.inf:
                    if (last_window_res - residual) < stall_rtol * residual:
                        return x, INFEASIBLE_STALL, it, residual, margin
                last_window_res = residual
    return x, MAX_ITER, max_iter, residual, margin


def _unpack_indices(d):
    iu_r, iu_c = np.triu_indices(d, 1)
    return iu_r, iu_c


def _unpack_batch(z, d, n_blocks):
    nv = d * d
    v = z.reshape(n_blocks, nv)
    H = np.zeros((n_blocks, d, d), dtype=np.complex128)
    idx = np.arange(d)
    H[:, idx, idx] = v[:, :d]
    iu_r, iu_c = _unpack_indices(d)
    off = (v[:, d::2] + 1j * v[:, d + 1::2]) / SQRT2
    H[:, iu_r, iu_c] = off
    H[:, iu_c, iu_r] = off.conj()
    return H


def _pack_batch(H):
    n_blocks, d, _ = H.shape
    out = np.empty((n_blocks, d * d))
    idx = np.arange(d)
    out[:, :d] = H[:, idx, idx].real
    iu_r, iu_c = _unpack_indices(d)
    off = 0.5 * (H[:, iu_r, iu_c] + H[:, iu_c, iu_r].conj())
    out[:, d::2] = SQRT2 * off.real
    out[:, d + 1::2] = SQRT2 * off.imag
    return out.reshape(-1)


def psd_project_numpy(z, d, n_blocks):
    H = _unpack_batch(z, d, n_blocks)
    w, V = np.linalg.eigh(H)
    P = (V * np.clip(w, 0.0, None)[:, None, :]) @ V.conj().transpose(0, 2, 1)
    return _pack_batch(P), w[:, 0]


def dykstra_numpy(Q, shift, C, b, x0, d, n_blocks, tol, max_iter,
                  check_every, stall_window, stall_rtol):
    x = x0.copy()
    q = np.zeros_like(x)
    residual = np.inf
    margin = -np.inf
    last_window_res = np.inf
    for it in range(1, max_iter + 1):
        y = Q @ x + shift
        zq = y + q
        x, _ = psd_project_numpy(zq, d, n_blocks)
        q = zq - x
        if it % check_every == 0 or it == max_iter:
            residual = np.max(np.abs(C @ x - b))
            if residual < tol:
                return x, FEASIBLE, it, residual, margin
            h = y - x
            g = h - Q @ h
            gnorm = np.sqrt(g @ g)
            if gnorm > 0.0:
                lmax = max(np.linalg.eigvalsh(_unpack_batch(g, d, n_blocks)).max(), 0.0)
                margin = g @ shift - d * lmax
                slack = 1e-12 * gnorm * (np.sqrt(shift @ shift) + d)
                if margin > slack:
                    return x, INFEASIBLE_CERT, it, residual, margin
            if it % stall_window == 0:
                if last_window_res < np.inf and (last_window_res - residual) < stall_rtol * residual:
                    return x, INFEASIBLE_STALL, it, residual, margin
                last_window_res = residual
    return x, MAX_ITER, max_iter, residual, margin


if USE_NUMBA:
    dykstra = jit(dykstra_loop)
else:
    dykstra = dykstra_numpy


# ----------------------------------------------------------------------------
# See-saw over pure product states
# ----------------------------------------------------------------------------

def seesaw_loop(T, r0, sign, tol, max_iter, trace):
    """Extremise u^T T v over Bloch vectors u = (1, r), v = (1, s) on the sphere.

    ``T[a, b]`` is the coefficient of sigma_a (x) sigma_b. ``sign`` is +1 to
    minimise and -1 to maximise. Each half step is exact: contracting with
    one factor leaves a 2x2 operator whose extremal eigenvector is the
    Bloch vector -sign * w / |w|. ``trace`` receives sign * objective after
    every half step, a non-increasing sequence; returns (value, r, s, steps).
    """
    r = r0.copy()
    s = np.zeros(3)
    value = np.inf
    steps = 0
    for it in range(max_iter):
        # optimise s for fixed r
        w0 = T[0, 0] + r[0] * T[1, 0] + r[1] * T[2, 0] + r[2] * T[3, 0]
        w = np.zeros(3)
        for bb in range(3):
            w[bb] = T[0, bb + 1] + r[0] * T[1, bb + 1] + r[1] * T[2, bb + 1] + r[2] * T[3, bb + 1]
        nw = np.sqrt(w[0] ** 2 + w[1] ** 2 + w[2] ** 2)
        if nw > 0.0:
            for bb in range(3):
                s[bb] = -sign * w[bb] / nw
        v1 = sign * (w0 + w[0] * s[0] + w[1] * s[1] + w[2] * s[2])
        if steps < trace.shape[0]:
            trace[steps] = v1
        steps += 1
        # optimise r for fixed s
        z0 = T[0, 0] + s[0] * T[0, 1] + s[1] * T[0, 2] + s[2] * T[0, 3]
        z = np.zeros(3)
        for aa in range(3):
            z[aa] = T[aa + 1, 0] + s[0] * T[aa + 1, 1] + s[1] * T[aa + 1, 2] + s[2] * T[aa + 1, 3]
        nz = np.sqrt(z[0] ** 2 + z[1] ** 2 + z[2] ** 2)
        if nz > 0.0:
            for aa in range(3):
                r[aa] = -sign * z[aa] / nz
        v2 = sign * (z0 + z[0] * r[0] + z[1] * r[1] + z[2] * r[2])
        if steps < trace.shape[0]:
            trace[steps] = v2
        steps += 1
        if abs(value - v2) < tol:
            value = v2
            break
        value = v2
    return sign * value, r, s, steps


seesaw = jit(seesaw_loop)
