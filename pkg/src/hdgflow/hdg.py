"""Element-local HDG residuals and Jacobians for the mixed Navier-Stokes system.

Unknowns per element (all nodal, degree ``k``):

* ``U``   (n_en, 4)  conserved variables
* ``eps`` (n_en, 3)  deviatoric strain rate in Voigt order (e11, e22, e12)
* ``phi`` (n_en, 2)  temperature gradient

The hybrid trace ``H`` lives on the skeleton with shape
``(n_faces, n_fn, 4)`` in each face's canonical node order.

The local vector ``Z`` stacks ``U`` node-major, then ``eps``, then ``phi``
(Euler runs carry ``U`` only).  An element's trace vector is ordered
``(local_face, face_node, component)`` in the element's own traversal
direction; :attr:`Discretization.gdof` maps it to global trace dofs.

All equations are written as residuals ``R = 0``:

* conservation:  ``M (U - U_old)/dt - (grad W, F - G - G*) + <W, h> + (grad W, e grad U) - (W, S)``
* strain rate:   ``M eps + (C^T grad W, v(U)) - <W, (C n)^T v(u_hat)>``
* heat flux:     ``M phi + (grad W, T(U)) - <W n, T(u_hat)>``
* transmission:  ``<W_hat, h>`` summed over both sides of interior faces, or
  ``<W_hat, B>`` on boundary faces

with the one-sided face flux
``h = F(u_hat) n + tau (U - u_hat) - G(u_hat, eps, phi) n + tau_d (U - u_hat) - G* n``.

Pointwise flux derivatives come from complex-step differentiation; the
artificial-viscosity coefficients are treated as frozen data.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import physics as ph
from ._cstep import jacobians
from .basis import face_points, face_tangent, reference_element
from .boundary import boundary_kernel, check_bindings, _state_at
from .riemann import trace_flux_kernel

# eps_m = sum_{i,l} C[m, i, l] d v_i / d x_l
STRAIN_OPERATOR = np.array([
    [[4.0 / 3.0, 0.0], [0.0, -2.0 / 3.0]],
    [[-2.0 / 3.0, 0.0], [0.0, 4.0 / 3.0]],
    [[0.0, 1.0], [1.0, 0.0]],
])


@dataclass
class HDGState:
    U: np.ndarray
    H: np.ndarray
    eps: np.ndarray = None
    phi: np.ndarray = None

    def copy(self):
        return HDGState(self.U.copy(), self.H.copy(),
                        None if self.eps is None else self.eps.copy(),
                        None if self.phi is None else self.phi.copy())


@dataclass
class ArtificialViscosity:
    """Frozen artificial-viscosity data sampled at quadrature points.

    ``lap_q`` (E, nq): Laplacian coefficient; ``beta_q`` (E, nq) and
    ``beta_f`` (E, 3, nfq): bulk viscosity; ``pr_beta``: its Prandtl number.
    """

    lap_q: np.ndarray = None
    beta_q: np.ndarray = None
    beta_f: np.ndarray = None
    pr_beta: float = 0.9


@dataclass
class LocalSystem:
    R_Z: np.ndarray
    R_H: np.ndarray
    A_ZZ: np.ndarray = None
    A_ZH: np.ndarray = None
    A_HZ: np.ndarray = None
    A_HH: np.ndarray = None
    time_term: np.ndarray = None
    info: dict = field(default_factory=dict)


def bulk_flux_kernel(U, eps, phi, beta, pr_beta):
    """``G* = beta [0; div(v) I; (div(v) v + phi / Pr_beta)^T]`` with ``div v = 1.5 tr(eps)``."""
    div = 1.5 * (eps[..., 0] + eps[..., 1])
    v = ph.velocity(U)
    G = np.zeros(U.shape + (ph.NSD,), dtype=np.result_type(U, eps, phi))
    G[..., 1, 0] = div
    G[..., 2, 1] = div
    G[..., 3, :] = div[..., None] * v + phi / pr_beta
    return beta[..., None, None] * G


class Discretization:
    """Geometry, operators and dof maps of the HDG method on one mesh.

    Parameters
    ----------
    mesh : Mesh
    k : int
        Polynomial degree of all unknowns.
    gas : GasModel
        ``gas.reynolds = inf`` gives the Euler system without mixed variables.
    scheme : RiemannScheme
    bcs : dict
        Boundary tag -> condition object from :mod:`hdgflow.boundary`.
    source : callable, optional
        ``S(x) -> (..., 4)`` volume source on the right-hand side.
    """

    def __init__(self, mesh, k, gas, scheme, bcs, source=None, quad_degree=None):
        check_bindings(mesh.tag_names, bcs)
        self.mesh = mesh
        self.k = k
        self.gas = gas
        self.scheme = scheme
        self.bcs = dict(bcs)
        self.viscous = not gas.inviscid
        ref = reference_element(k, quad_degree, quad_degree)
        self.ref = ref
        E = mesh.n_elements
        self.n_el = E
        self.n_en = ref.n_en
        self.n_fn = ref.n_fn
        self.nU = 4 * ref.n_en
        self.nE = 3 * ref.n_en if self.viscous else 0
        self.nP = 2 * ref.n_en if self.viscous else 0
        self.nz = self.nU + self.nE + self.nP
        self.nh = 3 * ref.n_fn * 4
        self.zc = 9 if self.viscous else 4

        x, J, det = mesh.geometry(ref.qp)
        invJ = np.linalg.inv(J)
        self.xq = x
        self.wdet = ref.qw * det
        self.gradN = np.einsum("qaj,eqji->eqai", ref.dN, invJ)
        self.N = ref.N
        self.mass = np.einsum("eq,qa,qb->eab", self.wdet, ref.N, ref.N)

        nfq = ref.n_fq
        self.xf = np.empty((E, 3, nfq, 2))
        self.nf = np.empty((E, 3, nfq, 2))
        self.wds = np.empty((E, 3, nfq))
        for f in range(3):
            xf, Jf, _ = mesh.geometry(face_points(f, ref.fq_t))
            tv = Jf @ face_tangent(f)
            length = np.linalg.norm(tv, axis=-1)
            self.xf[:, f] = xf
            self.nf[:, f, :, 0] = tv[..., 1] / length
            self.nf[:, f, :, 1] = -tv[..., 0] / length
            self.wds[:, f] = ref.fq_w * length
        self.Nf = ref.Nf
        self.Lf = ref.Lf
        if self.viscous:
            self.gC = np.einsum("mil,eqal->eqami", STRAIN_OPERATOR, self.gradN)
            self.nC = np.einsum("mil,efql->efqmi", STRAIN_OPERATOR, self.nf)

        sk = mesh.skeleton
        self.skeleton = sk
        nfn = ref.n_fn
        fwd = np.arange(nfn)
        perm = np.where(sk.elem_flip[..., None], fwd[::-1], fwd)
        self.local_perm = perm
        self.trace_node = sk.elem_faces[..., None] * nfn + perm
        self.gdof = (self.trace_node[..., None] * 4 + np.arange(4)).reshape(E, self.nh)
        self.n_trace = sk.n_faces * nfn
        self.ndof = self.n_trace * 4

        zc = self.zc
        zcols = np.empty((ref.n_en, zc), dtype=int)
        a = np.arange(ref.n_en)
        zcols[:, :4] = a[:, None] * 4 + np.arange(4)
        if self.viscous:
            zcols[:, 4:7] = self.nU + a[:, None] * 3 + np.arange(3)
            zcols[:, 7:9] = self.nU + self.nE + a[:, None] * 2 + np.arange(2)
        self.zcols = zcols.ravel()

        self.boundary_mask = np.zeros((E, 3), dtype=bool)
        self.bc_groups = []
        for tag in sorted(set(t for t in sk.tags if t is not None)):
            faces = sk.boundary_faces(tag)
            eb = sk.face_elem[faces, 0]
            fb = sk.face_local[faces, 0]
            cond = self.bcs[tag]
            ext = _state_at(cond.state, self.xf[eb, fb]) if cond.needs_external else None
            self.bc_groups.append((cond, eb, fb, ext))
            self.boundary_mask[eb, fb] = True

        self.source = source
        self.rhs_source = None
        if source is not None:
            S = np.asarray(source(self.xq), dtype=float)
            self.rhs_source = np.einsum("eq,qa,eqc->eac", self.wdet, ref.N, S)

    # -- layout helpers ------------------------------------------------------

    @property
    def node_coords(self):
        return self.mesh.geometry(self.ref.nodes)[0]

    def trace_coords(self):
        """Physical coordinates of every trace node, shape ``(n_faces, n_fn, 2)``."""
        sk = self.skeleton
        out = np.empty((sk.n_faces, self.n_fn, 2))
        for f in range(3):
            sel = sk.face_local[:, 0] == f
            x, _, _ = self.mesh.geometry(face_points(f, self.ref.trace_nodes))
            out[sel] = x[sk.face_elem[sel, 0]]
        return out

    def gather(self, H):
        """Element-local trace values ``(E, 3, n_fn, c)`` in each element's face order."""
        Hf = H.reshape((self.n_trace,) + H.shape[2:])
        return Hf[self.trace_node]

    def scatter_trace(self, R_H):
        return np.bincount(self.gdof.ravel(), weights=R_H.ravel(), minlength=self.ndof)

    def pack(self, state):
        E = self.n_el
        parts = [state.U.reshape(E, -1)]
        if self.viscous:
            parts += [state.eps.reshape(E, -1), state.phi.reshape(E, -1)]
        return np.concatenate(parts, axis=1)

    def unpack(self, Z):
        E, n = self.n_el, self.n_en
        U = Z[:, :self.nU].reshape(E, n, 4)
        if not self.viscous:
            return U, None, None
        eps = Z[:, self.nU:self.nU + self.nE].reshape(E, n, 3)
        phi = Z[:, self.nU + self.nE:].reshape(E, n, 2)
        return U, eps, phi

    def state_from_function(self, fun, eps_fun=None, phi_fun=None):
        """Interpolate ``fun(x) -> U`` at element and trace nodes."""
        xn = self.node_coords
        U = np.asarray(fun(xn), dtype=float)
        H = np.asarray(fun(self.trace_coords()), dtype=float)
        eps = phi = None
        if self.viscous:
            eps = np.zeros(xn.shape[:-1] + (3,)) if eps_fun is None else np.asarray(eps_fun(xn), float)
            phi = np.zeros(xn.shape[:-1] + (2,)) if phi_fun is None else np.asarray(phi_fun(xn), float)
        return HDGState(U, H, eps, phi)

    def uniform_state(self, U0):
        U0 = np.asarray(U0, dtype=float)
        return self.state_from_function(lambda x: np.broadcast_to(U0, x.shape[:-1] + (4,)).copy())

    def admissibility(self, state):
        """Minimum density and pressure over element and trace nodes."""
        g = self.gas.gamma
        U = np.concatenate([state.U.reshape(-1, 4), state.H.reshape(-1, 4)])
        with np.errstate(all="ignore"):
            p = ph.pressure(U, g)
        return float(np.min(U[:, 0])), float(np.min(p))

    # -- residual and Jacobian -----------------------------------------------

    def evaluate(self, state, dt=math.inf, U_prev=None, av=None, jacobian=True):
        """Local residuals and (optionally) Jacobian blocks of every element."""
        g = self.gas.gamma
        gas = self.gas
        scheme = self.scheme
        visc = self.viscous
        E, n_en = self.n_el, self.n_en
        N, Nf, Lf = self.N, self.Nf, self.Lf
        wdet, wds, gradN, nf = self.wdet, self.wds, self.gradN, self.nf
        av = av or ArtificialViscosity()

        U = state.U
        Hloc = self.gather(state.H)
        Uq = np.einsum("qa,eac->eqc", N, U)
        Uf = np.einsum("fqa,eac->efqc", Nf, U)
        Hf = np.einsum("qj,efjc->efqc", Lf, Hloc)
        if visc:
            Eq = np.einsum("qa,eac->eqc", N, state.eps)
            Pq = np.einsum("qa,eac->eqc", N, state.phi)
            Ef = np.einsum("fqa,eac->efqc", Nf, state.eps)
            Pf = np.einsum("fqa,eac->efqc", Nf, state.phi)
        else:
            Eq = np.zeros(Uq.shape[:-1] + (3,))
            Pq = np.zeros(Uq.shape[:-1] + (2,))
            Ef = np.zeros(Uf.shape[:-1] + (3,))
            Pf = np.zeros(Uf.shape[:-1] + (2,))
        tau_d = gas.tau_d
        beta_q, beta_f = av.beta_q, av.beta_f
        pr_b = av.pr_beta

        def vol_flux(u, e, p):
            F = ph.inviscid_flux(u, g)
            if visc:
                F = F - ph.viscous_flux_kernel(u, e, p, gas)
                if beta_q is not None:
                    F = F - bulk_flux_kernel(u, e, p, beta_q, pr_b)
            return F

        def face_flux(u, e, p, hh):
            out = trace_flux_kernel(scheme, hh, u, nf, g)
            if visc:
                G = ph.viscous_flux_kernel(hh, e, p, gas)
                if beta_f is not None:
                    G = G + bulk_flux_kernel(hh, e, p, beta_f, pr_b)
                out = out - np.einsum("...ij,...j->...i", G, nf) + tau_d * (u - hh)
            return out

        if jacobian:
            if visc:
                FG, (dFu, dFe, dFp) = jacobians(vol_flux, Uq, Eq, Pq)
                dFZ = np.concatenate([dFu, dFe, dFp], axis=-1)
                h, (dhu, dhe, dhp, dhH) = jacobians(face_flux, Uf, Ef, Pf, Hf)
                dhZ = np.concatenate([dhu, dhe, dhp], axis=-1)
            else:
                FG, (dFZ,) = jacobians(lambda u: vol_flux(u, None, None), Uq)
                h, (dhZ, dhH) = jacobians(lambda u, hh: face_flux(u, None, None, hh), Uf, Hf)
        else:
            FG = vol_flux(Uq, Eq, Pq)
            h = face_flux(Uf, Ef, Pf, Hf)

        # boundary operators replace the transmission flux on boundary faces
        gflux = h.copy()
        if jacobian:
            dgZ = dhZ.copy()
            dgH = dhH.copy()
        for cond, eb, fb, ext in self.bc_groups:
            nb = nf[eb, fb]
            extb = ext

            def bk(u, e, p, hh, cond=cond, nb=nb, extb=extb):
                return boundary_kernel(cond, u, hh, e, p, nb, gas, extb)

            args = (Uf[eb, fb], Ef[eb, fb], Pf[eb, fb], Hf[eb, fb])
            if jacobian:
                val, (bu, be, bp, bH) = jacobians(bk, *args)
                gflux[eb, fb] = val
                bz = np.concatenate([bu, be, bp], axis=-1) if visc else bu
                dgZ[eb, fb] = bz
                dgH[eb, fb] = bH
            else:
                gflux[eb, fb] = bk(*args)

        # conservation equation
        R_U = (-np.einsum("eq,eqaj,eqcj->eac", wdet, gradN, FG, optimize=True)
               + np.einsum("efq,fqa,efqc->eac", wds, Nf, h, optimize=True))
        steady_U = R_U
        time_term = None
        if np.isfinite(dt):
            time_term = np.einsum("eab,ebc->eac", self.mass, U - U_prev) / dt
        lapK = None
        if av.lap_q is not None:
            lapK = np.einsum("eq,eqaj,eqbj->eab", wdet * av.lap_q, gradN, gradN, optimize=True)
            R_U = R_U + np.einsum("eab,ebc->eac", lapK, U)
        if self.rhs_source is not None:
            R_U = R_U - self.rhs_source
        steady_U = R_U
        if time_term is not None:
            R_U = R_U + time_term

        parts = [R_U.reshape(E, -1)]
        if visc:
            vq, (dvq,) = jacobians(ph.velocity, Uq)
            Tq, (dTq,) = jacobians(lambda u: ph.temperature(u, g), Uq)
            vh, (dvh,) = jacobians(ph.velocity, Hf)
            Th, (dTh,) = jacobians(lambda u: ph.temperature(u, g), Hf)
            R_E = (np.einsum("eab,ebm->eam", self.mass, state.eps)
                   + np.einsum("eq,eqami,eqi->eam", wdet, self.gC, vq, optimize=True)
                   - np.einsum("efq,fqa,efqmi,efqi->eam", wds, Nf, self.nC, vh, optimize=True))
            R_P = (np.einsum("eab,ebi->eai", self.mass, state.phi)
                   + np.einsum("eq,eqai,eq->eai", wdet, gradN, Tq, optimize=True)
                   - np.einsum("efq,fqa,efqi,efq->eai", wds, Nf, nf, Th, optimize=True))
            parts += [R_E.reshape(E, -1), R_P.reshape(E, -1)]
        R_Z = np.concatenate(parts, axis=1)
        R_H = np.einsum("efq,qj,efqc->efjc", wds, Lf, gflux, optimize=True).reshape(E, self.nh)

        steady_Z = np.concatenate([steady_U.reshape(E, -1)] + parts[1:], axis=1)
        sysm = LocalSystem(R_Z, R_H, time_term=time_term)
        sysm.info["steady_Z"] = steady_Z
        sysm.info["steady_U"] = steady_U
        if not jacobian:
            return sysm

        nz, nh, nU, zc = self.nz, self.nh, self.nU, self.zc
        nfn = self.n_fn
        A_ZZ = np.zeros((E, nz, nz))
        A_ZH = np.zeros((E, nz, nh))
        A_HZ = np.zeros((E, nh, nz))
        A_HH = np.zeros((E, nh, nh))

        JUZ = (-np.einsum("eq,eqaj,eqcjz,qb->eacbz", wdet, gradN, dFZ, N, optimize=True)
               + np.einsum("efq,fqa,efqcz,fqb->eacbz", wds, Nf, dhZ, Nf, optimize=True))
        A_ZZ[:, :nU, self.zcols] = JUZ.reshape(E, nU, n_en * zc)
        eye4 = np.eye(4)
        diagU = np.zeros((E, n_en, n_en))
        if time_term is not None:
            diagU = diagU + self.mass / dt
        if lapK is not None:
            diagU = diagU + lapK
        A_ZZ[:, :nU, :nU] += np.einsum("eab,cd->eacbd", diagU, eye4).reshape(E, nU, nU)
        A_ZH[:, :nU, :] = np.einsum("efq,fqa,efqcd,qj->eacfjd", wds, Nf, dhH, Lf,
                                    optimize=True).reshape(E, nU, nh)
        if visc:
            nE, nP = self.nE, self.nP
            sE = slice(nU, nU + nE)
            sP = slice(nU + nE, nz)
            A_ZZ[:, sE, sE] = np.einsum("eab,mn->eambn", self.mass, np.eye(3)).reshape(E, nE, nE)
            A_ZZ[:, sP, sP] = np.einsum("eab,ij->eaibj", self.mass, np.eye(2)).reshape(E, nP, nP)
            A_ZZ[:, sE, :nU] = np.einsum("eq,eqami,eqic,qb->eambc", wdet, self.gC, dvq, N,
                                         optimize=True).reshape(E, nE, nU)
            A_ZZ[:, sP, :nU] = np.einsum("eq,eqai,eqc,qb->eaibc", wdet, gradN, dTq, N,
                                         optimize=True).reshape(E, nP, nU)
            A_ZH[:, sE, :] = -np.einsum("efq,fqa,efqmi,efqic,qj->eamfjc", wds, Nf, self.nC, dvh, Lf,
                                        optimize=True).reshape(E, nE, nh)
            A_ZH[:, sP, :] = -np.einsum("efq,fqa,efqi,efqc,qj->eaifjc", wds, Nf, nf, dTh, Lf,
                                        optimize=True).reshape(E, nP, nh)
        A_HZ[:, :, self.zcols] = np.einsum("efq,qj,efqcz,fqb->efjcbz", wds, Lf, dgZ, Nf,
                                           optimize=True).reshape(E, nh, n_en * zc)
        blk = 4 * nfn
        for f in range(3):
            s = slice(f * blk, (f + 1) * blk)
            A_HH[:, s, s] = np.einsum("eq,qj,eqcd,qi->ejcid", wds[:, f], Lf, dgH[:, f], Lf,
                                      optimize=True).reshape(E, blk, blk)
        sysm.A_ZZ, sysm.A_ZH, sysm.A_HZ, sysm.A_HH = A_ZZ, A_ZH, A_HZ, A_HH
        return sysm

    def global_residual(self, sysm):
        return self.scatter_trace(sysm.R_H)

    def steady_norms(self, sysm):
        """``(continuity, total)`` L2 norms of the steady residual."""
        cont = float(np.linalg.norm(sysm.info["steady_U"][..., 0]))
        total = math.sqrt(float(np.sum(sysm.info["steady_Z"] ** 2))
                          + float(np.sum(self.global_residual(sysm) ** 2)))
        return cont, total

    def local_residual(self, element, state, dt=math.inf, U_prev=None, av=None):
        """Residual and Jacobian blocks of a single element (convenience view)."""
        sysm = self.evaluate(state, dt, U_prev, av)
        e = element
        return LocalSystem(sysm.R_Z[e], sysm.R_H[e], sysm.A_ZZ[e], sysm.A_ZH[e],
                           sysm.A_HZ[e], sysm.A_HH[e])
