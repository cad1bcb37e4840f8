#!/usr/bin/env python3
"""Regenerate the bundled molecular Hamiltonian fixtures.

Requires pyscf, numpy and scipy. Each molecule is reduced to an active space
(STO-3G, RHF orbitals, frozen core), mapped to qubits with the parity
encoding over interleaved spin orbitals (a0 b0 a1 b1 ...), and decomposed
into Pauli strings by trace projection. Qubit k of a Pauli string is
character k (little-endian, matching the C++ simulator).

    python3 tools/gen_fixtures.py data/hamiltonians
"""
import itertools
import json
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from pyscf import ao2mo, gto, mcscf, scf

MOLECULES = [
    # name, geometry (angstrom), active spatial orbitals, active electrons
    ("H2-4", "H 0 0 0; H 0 0 0.735", 2, 2),
    ("LiH-4", "Li 0 0 0; H 0 0 1.595", 2, 2),
    ("LiH-6", "Li 0 0 0; H 0 0 1.595", 3, 2),
    ("H2O-8", "O 0 0 0.1173; H 0 0.7572 -0.4692; H 0 -0.7572 -0.4692", 4, 4),
]


def active_integrals(atom, ncas, nelecas):
    mol = gto.M(atom=atom, basis="sto-3g", unit="angstrom", verbose=0)
    mf = scf.RHF(mol).run()
    cas = mcscf.CASCI(mf, ncas, nelecas)
    h1, ecore = cas.get_h1eff()
    h2 = ao2mo.restore(1, cas.get_h2eff(), ncas)
    return ecore, h1, h2


def annihilators(n_modes):
    """Jordan-Wigner annihilation operators; mode j is bit j of the index."""
    dim = 1 << n_modes
    ops = []
    for j in range(n_modes):
        rows, cols, vals = [], [], []
        for b in range(dim):
            if (b >> j) & 1:
                sign = (-1) ** bin(b & ((1 << j) - 1)).count("1")
                rows.append(b ^ (1 << j))
                cols.append(b)
                vals.append(sign)
        ops.append(sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim)))
    return ops


def fermionic_matrix(ecore, h1, h2):
    n_orb = h1.shape[0]
    n_modes = 2 * n_orb
    a = annihilators(n_modes)
    ad = [op.T.tocsr() for op in a]
    dim = 1 << n_modes
    H = sp.identity(dim, format="csr") * ecore

    def spin_orbital(p):
        return p // 2, p % 2

    for p in range(n_modes):
        for q in range(n_modes):
            (i, si), (j, sj) = spin_orbital(p), spin_orbital(q)
            if si == sj and abs(h1[i, j]) > 0:
                H = H + h1[i, j] * (ad[p] @ a[q])
    # 1/2 sum (ij|kl) a+_{i s} a+_{k t} a_{l t} a_{j s}, chemists' notation
    for p, q, r, s in itertools.product(range(n_modes), repeat=4):
        (i, si), (j, sj) = spin_orbital(p), spin_orbital(q)
        (k, sk), (l, sl) = spin_orbital(r), spin_orbital(s)
        if si != sj or sk != sl:
            continue
        v = h2[i, j, k, l]
        if abs(v) < 1e-14:
            continue
        H = H + 0.5 * v * (ad[p] @ ad[r] @ a[s] @ a[q])
    return H.toarray(), n_modes


def to_parity_basis(H, n):
    """Permute occupation-basis matrix into the parity basis."""
    dim = 1 << n
    perm = np.zeros(dim, dtype=np.int64)
    for occ in range(dim):
        par, acc = 0, 0
        for k in range(n):
            acc ^= (occ >> k) & 1
            par |= acc << k
        perm[occ] = par
    out = np.zeros_like(H)
    out[np.ix_(perm, perm)] = H
    return out


def pauli_decompose(H, n, cutoff=1e-10):
    dim = 1 << n
    idx = np.arange(dim)
    popcount = np.array([bin(v).count("1") for v in range(dim)])
    terms = []
    for letters in itertools.product("IXYZ", repeat=n):
        xmask = ymask = zmask = 0
        for k, c in enumerate(letters):
            if c == "X":
                xmask |= 1 << k
            elif c == "Y":
                xmask |= 1 << k
                ymask |= 1 << k
            elif c == "Z":
                zmask |= 1 << k
        n_y = bin(ymask).count("1")
        # P|b> = i^{nY} (-1)^{|b & (y|z)|} |b ^ x>;  Tr(P H) = sum_b <b|P H|b>
        sign = (-1.0) ** popcount[idx & (ymask | zmask)]
        phase = (1j) ** n_y * sign
        # <b|P = (P^dag |b>)^dag ; P Hermitian so Tr(PH) = sum_b phase_b H[b, b^x]
        tr = np.sum(np.conj(phase) * H[idx ^ xmask, idx])
        coeff = tr / dim
        if abs(coeff) > cutoff:
            terms.append(("".join(letters), float(np.real(coeff))))
    return terms


def pauli_matrix(label):
    mats = {
        "I": np.eye(2),
        "X": np.array([[0, 1], [1, 0]]),
        "Y": np.array([[0, -1j], [1j, 0]]),
        "Z": np.diag([1.0, -1.0]),
    }
    out = np.array([[1.0]])
    for c in label:  # qubit 0 least significant => rightmost Kronecker factor
        out = np.kron(mats[c], out)
    return out


def document(name, n, terms):
    dim = 1 << n
    H = np.zeros((dim, dim), dtype=complex)
    for label, c in terms:
        H += c * pauli_matrix(label)
    exact = float(np.linalg.eigvalsh(H)[0])
    e_min = -sum(abs(c) for _, c in terms)
    assert e_min < exact
    return {
        "name": name,
        "n_qubits": n,
        "exact_ground_energy": exact,
        "e_min_proxy": e_min,
        "terms": [{"coeff": c, "pauli": label} for label, c in terms],
    }


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    toy = [("ZZ", 0.5), ("XI", 0.3), ("IZ", -0.4)]
    docs = [("toy-2", document("toy-2", 2, toy))]
    for name, atom, ncas, nel in MOLECULES:
        ecore, h1, h2 = active_integrals(atom, ncas, nel)
        H, n = fermionic_matrix(ecore, h1, h2)
        H = to_parity_basis(H, n)
        terms = pauli_decompose(H, n)
        docs.append((name, document(name, n, terms)))
    for name, doc in docs:
        path = out / f"{name.lower()}.json"
        path.write_text(json.dumps(doc, indent=1) + "\n")
        print(f"{path}: {len(doc['terms'])} terms, E0 = {doc['exact_ground_energy']:.10f}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/hamiltonians")
