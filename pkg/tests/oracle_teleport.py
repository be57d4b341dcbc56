"""Brute-force teleportation oracle on the explicit 8-dimensional space.

Written with plain index loops and hand-built matrices, independently of the
package, to cross-check the pipeline cell by cell.  Index order is
(signal polarization s, idler path p, idler polarization q), flat index
``4*s + 2*p + q``.
"""
import math

import numpy as np

R2 = 1 / math.sqrt(2)
KETS = {
    "H": [1, 0], "V": [0, 1], "D": [R2, R2], "A": [R2, -R2], "R": [R2, 1j * R2], "L": [R2, -1j * R2],
}
PAULI_I = [[1, 0], [0, 1]]
PAULI_X = [[0, 1], [1, 0]]
PAULI_Z = [[1, 0], [0, -1]]
PAULI_XZ = [[0, -1], [1, 0]]
STANDARD = {"Phi+": PAULI_I, "Phi-": PAULI_Z, "Psi+": PAULI_X, "Psi-": PAULI_XZ}
PAPER = {"Phi+": PAULI_XZ, "Phi-": PAULI_X, "Psi+": PAULI_Z, "Psi-": PAULI_I}
# beam displacer: idler polarization q -> path p, with amplitude
BD_STANDARD = {0: (0, 1.0), 1: (1, 1.0)}
BD_PAPER = {0: (1, 1.0), 1: (0, -1.0)}  # path picks up XZ: |0> -> |1>, |1> -> -|0>


def bell_vector(label):
    v = [0j] * 4  # index 2*p + q
    if label == "Phi+":
        v[0], v[3] = R2, R2
    elif label == "Phi-":
        v[0], v[3] = R2, -R2
    elif label == "Psi+":
        v[1], v[2] = R2, R2
    else:
        v[1], v[2] = R2, -R2
    return v


def source_matrix(w):
    """(1-w)|Phi+><Phi+| + w I/4 on (signal, idler) polarization, index 2*s + i."""
    phi = bell_vector("Phi+")
    return [[(1 - w) * phi[a] * phi[b].conjugate() + (w / 4 if a == b else 0) for b in range(4)] for a in range(4)]


def teleport_cell(rho_src, phi, outcome, v, convention="standard"):
    bd = BD_STANDARD if convention == "standard" else BD_PAPER
    table = STANDARD if convention == "standard" else PAPER
    # beam displacer on the source: rho_sp[(s,p),(s',p')]
    rho_sp = [[0j] * 4 for _ in range(4)]
    for s in range(2):
        for i in range(2):
            p, amp = bd[i]
            for s2 in range(2):
                for i2 in range(2):
                    p2, amp2 = bd[i2]
                    rho_sp[2 * s + p][2 * s2 + p2] += amp * amp2 * rho_src[2 * s + i][2 * s2 + i2]
    # joint 8x8 state with the input on the idler polarization
    rho8 = [[0j] * 8 for _ in range(8)]
    for s in range(2):
        for p in range(2):
            for q in range(2):
                for s2 in range(2):
                    for p2 in range(2):
                        for q2 in range(2):
                            rho8[4 * s + 2 * p + q][4 * s2 + 2 * p2 + q2] = (
                                rho_sp[2 * s + p][2 * s2 + p2] * phi[q] * phi[q2].conjugate())
    # POVM element on (p, q): v |b><b| + (1 - v) diag(|b><b|)
    b = bell_vector(outcome)
    povm = [[v * b[x] * b[y].conjugate() + ((1 - v) * abs(b[x]) ** 2 if x == y else 0) for y in range(4)]
            for x in range(4)]
    # unnormalized conditional signal state: Tr_pq[(I x povm) rho8]
    sig = [[0j, 0j], [0j, 0j]]
    for s in range(2):
        for s2 in range(2):
            acc = 0j
            for x in range(4):
                for y in range(4):
                    acc += povm[x][y] * rho8[4 * s + y][4 * s2 + x]
            sig[s][s2] = acc
    prob = (sig[0][0] + sig[1][1]).real
    # corrected target U|phi>
    u = table[outcome]
    target = [u[r][0] * phi[0] + u[r][1] * phi[1] for r in range(2)]
    fid = 0j
    for r in range(2):
        for c in range(2):
            fid += target[r].conjugate() * sig[r][c] * target[c]
    return prob, (fid.real / prob if prob > 0 else 0.0)


def teleport_table(w, inputs, v, convention="standard"):
    outcomes = ("Phi+", "Phi-", "Psi+", "Psi-")
    rho = source_matrix(w)
    probs = np.zeros((len(inputs), 4))
    fids = np.zeros((len(inputs), 4))
    for k, phi in enumerate(inputs):
        phi = KETS[phi] if isinstance(phi, str) else list(phi)
        for o, out in enumerate(outcomes):
            probs[k, o], fids[k, o] = teleport_cell(rho, [complex(c) for c in phi], out, v, convention)
    return probs, fids
