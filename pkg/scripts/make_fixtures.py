"""Regenerate the checked-in FCIDUMP fixtures.

Requires pyscf, which is not a runtime dependency of the package:

    pip install pyscf
    python scripts/make_fixtures.py
"""
import os

import numpy as np
from pyscf import ao2mo, gto, mcscf, scf
from pyscf.tools import fcidump

OUT = os.path.join(os.path.dirname(__file__), "..", "src", "novqe", "fixtures")

HEXATRIENE_TRANS = """
C  0.5987833  0.2969975  0.0000000
H  0.6520887  1.3822812  0.0000000
C -0.5987843 -0.2970141  0.0000000
H -0.6520904 -1.3822967  0.0000000
C -1.8607210  0.4195548  0.0000000
H -1.8010551  1.5036080  0.0000000
C -3.0531867 -0.1693136  0.0000000
H -3.9685470  0.4053361  0.0000000
H -3.1479810 -1.2485605  0.0000000
C  1.8607264 -0.4195599  0.0000000
H  1.8010777 -1.5036141  0.0000000
C  3.0531816  0.1693296  0.0000000
H  3.9685551 -0.4052992  0.0000000
H  3.1479561  1.2485793  0.0000000
"""

HEXATRIENE_TWIST90 = """
C  0.5987833  0.2969975  0.0000000
H  1.3716346 -0.0683717  0.6707370
C -0.5987843 -0.2970141  0.0000000
H -1.3716354  0.0683544  0.6707361
C -0.9484080 -1.4197297 -0.8504282
H -0.1721763 -1.7803215 -1.5183873
C -2.1390983 -2.0121775 -0.8520831
H -2.3554088 -2.8468591 -1.5037144
H -2.9353514 -1.6772360 -0.1982062
C  0.9484189  1.4197134 -0.8504230
H  0.1721980  1.7803171 -1.5183881
C  2.1391167  2.0121462 -0.8520613
H  2.3554502  2.8468291 -1.5036834
H  2.9353585  1.6771903 -0.1981764
"""


def full_space(mol, name):
    mf = scf.RHF(mol).run(conv_tol=1e-12)
    fcidump.from_scf(mf, os.path.join(OUT, name), tol=1e-14)
    return mf


def pi_space(mol, name):
    """(6e,6o) active space built from the six MOs with the largest carbon 2p-pi weight."""
    mf = scf.RHF(mol).run(conv_tol=1e-12)
    labels = mol.ao_labels()
    c = mf.mo_coeff
    s = mf.get_ovlp()
    # local pi direction: normal of the plane through each carbon and its neighbours
    coords = mol.atom_coords()
    carbons = [i for i in range(mol.natm) if mol.atom_symbol(i) == "C"]
    weights = np.zeros(c.shape[1])
    for a in carbons:
        d = np.linalg.norm(coords - coords[a], axis=1)
        nbrs = [j for j in np.argsort(d)[1:4] if d[j] < 2.3 / 0.529177]
        v = coords[nbrs] - coords[a]
        normal = np.linalg.svd(v)[2][-1]
        p_idx = [i for i, lab in enumerate(labels)
                 if lab.split()[0] == str(a) and "2p" in lab]
        pvec = np.zeros(c.shape[0])
        pvec[p_idx] = normal
        proj = pvec @ s @ c
        weights += proj ** 2
    nocc = mol.nelectron // 2
    occ = np.argsort(-weights[:nocc])[:3]
    vir = nocc + np.argsort(-weights[nocc:])[:3]
    active = sorted(occ.tolist() + vir.tolist())
    mc = mcscf.CASCI(mf, 6, 6)
    mo = mc.sort_mo([i + 1 for i in active])
    h1, ecore = mc.get_h1eff(mo)
    h2 = ao2mo.restore(1, mc.get_h2eff(mo), 6)
    fcidump.from_integrals(os.path.join(OUT, name), h1, h2, 6, 6, nuc=ecore, tol=1e-14)
    print(name, "active MOs", active, "pi weights", np.round(weights[active], 3))


def main():
    h2 = gto.M(atom="H 0 0 0; H 0 0 0.74", basis="sto-3g", unit="angstrom")
    full_space(h2, "h2.fcidump")
    r = 1.23
    h4 = gto.M(atom=f"H 0 0 0; H {r} 0 0; H {r} {r} 0; H 0 {r} 0",
               basis="sto-3g", unit="angstrom")
    full_space(h4, "h4.fcidump")
    for geom, name in ((HEXATRIENE_TRANS, "hexatriene_trans.fcidump"),
                       (HEXATRIENE_TWIST90, "hexatriene_twist90.fcidump")):
        mol = gto.M(atom=geom, basis="sto-3g", unit="angstrom")
        pi_space(mol, name)


if __name__ == "__main__":
    main()
