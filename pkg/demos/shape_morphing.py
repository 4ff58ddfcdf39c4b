"""Three ways to deform a point cloud: lattice, kernel, and distance weights.

A square cloud of points is pushed by moving a handful of control handles.
Free-form deformation embeds the cloud in a Bernstein lattice, radial basis
interpolation solves a small kernel system, and inverse distance weighting
blends control displacements directly.
"""

import numpy as np

from morkit import morphing


def main():
    rng = np.random.default_rng(3)
    cloud = rng.random((200, 2))

    # FFD: lift the single interior control point of a quadratic lattice
    disp = np.zeros((3, 3, 2))
    disp[1, 1] = (0.0, 0.25)
    lattice = morphing.FfdLattice(origin=np.zeros(2), axes=np.eye(2),
                                  degrees=(2, 2), displacements=disp)
    ffd_out = morphing.ffd_deform(lattice, cloud)
    print(f"FFD max displacement: {np.abs(ffd_out - cloud).max():.3f}")

    # RBF: pin the corners, drag the center point
    ctrl = np.array([[0., 0.], [1., 0.], [0., 1.], [1., 1.], [0.5, 0.5]])
    target = ctrl.copy()
    target[4] = (0.65, 0.55)
    for kernel in ("gaussian", "thin-plate", "wendland-c2"):
        morph = morphing.rbf_build(ctrl, target, kernel=kernel)
        out = morphing.rbf_deform(morph, cloud)
        at_ctrl = morphing.rbf_deform(morph, ctrl)
        print(f"RBF {kernel:12s} max displacement {np.abs(out - cloud).max():.3f}, "
              f"control-point error {np.abs(at_ctrl - target).max():.1e}")

    # IDW: same handles, displacement blending with exponent 2
    morph = morphing.IdwMorph(control_points=ctrl, deformed_points=target)
    out = morphing.idw_deform(morph, cloud)
    at_ctrl = morphing.idw_deform(morph, ctrl)
    print(f"IDW max displacement {np.abs(out - cloud).max():.3f}, "
          f"control-point error {np.abs(at_ctrl - target).max():.1e}")


if __name__ == "__main__":
    main()
