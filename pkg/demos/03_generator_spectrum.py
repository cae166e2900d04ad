#!/usr/bin/env python3
"""Structure of the discretized Fokker-Planck generator: exact symmetry of
the similarity transform, the Gibbs kernel, condition numbers, operator-norm
and spectral-gap bounds, and the metastable gap collapse."""

import numpy as np

import torusfp as tf

lat = tf.make_lattice(1, 16, 1.0)
potentials = [
    tf.zero_potential(1, 1.0),
    tf.cosine_potential(1.0, 1, 1.0),
    tf.cosine_potential(2.0, 1, 1.0),
    tf.invcos_potential(4.0, 1.0),
]

print("=== structure checks (W = E/2, d = 1, N = 16) ===")
hdr = f"  {'potential':<16} {'sym resid':>10} {'kappa_V':>8} {'<= bound':>9} {'|L|':>10} {'<= bound':>10} {'gap':>7} {'floor':>7}"
print(hdr)
for E in potentials:
    op = tf.build_generator(E, lat)
    sym = np.linalg.norm(op.symmetrized - op.symmetrized.T) / max(np.linalg.norm(op.symmetrized), 1e-300)
    cn = tf.condition_number_check(op)
    on = tf.operator_norm_check(op)
    pr = tf.poincare_report(op)
    print(
        f"  {E.name:<16} {sym:>10.1e} {cn.kappa:>8.3f} {cn.bound:>9.3f}"
        f" {on.measured:>10.3e} {on.bound:>10.3e} {pr.gap:>7.2f} {pr.floor:>7.2f}"
    )

print("\n=== the kernel is the discretized Gibbs state ===")
op = tf.build_generator(tf.cosine_potential(2.0, 1, 1.0), lat)
gibbs = op.stationary / np.linalg.norm(op.stationary)
kernel = op.u_diag * op.kernel_vector()
kernel /= np.linalg.norm(kernel)
print(f"  cosine similarity of the zero mode with e^-W: {abs(kernel @ gibbs):.15f}")

print("\n=== metastability: the gap collapses with the barrier height ===")
lat2pi = tf.make_lattice(1, 16, 2 * np.pi)
print(f"  {'z':>4} {'gap (W = E)':>12}")
for z in (0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0):
    gap = tf.build_generator(tf.cosine_potential(z, 1, 2 * np.pi), lat2pi, halve=False).spectral_gap
    print(f"  {z:>4.1f} {gap:>12.4f}")
print("the gap first stiffens with the well, then decays exponentially once")
print("crossing the barrier dominates the relaxation.")
