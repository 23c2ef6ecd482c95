//! Label-preserving plan transforms and dataset composition.
//!
//! The five ops are the square-plan symmetries that fix the plan center:
//! three clockwise rotations and the two axis mirrors. Applied to a crack
//! configuration they permute bricks within each level; the scalar label of
//! an instance refers to the central channel and is copied unchanged.

use crate::error::{Error, Result};
use crate::lattice::CrackConfig;
use crate::oracle::{Dataset, DatasetTag, Instance};

/// Plan transform. Rotations are clockwise; `MirrorV` flips about the
/// vertical center-line (left/right), `MirrorH` about the horizontal one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AugmentOp {
    R90,
    R180,
    R270,
    MirrorV,
    MirrorH,
}

impl AugmentOp {
    pub const ALL: [AugmentOp; 5] = [
        AugmentOp::R90,
        AugmentOp::R180,
        AugmentOp::R270,
        AugmentOp::MirrorV,
        AugmentOp::MirrorH,
    ];

    /// Inverse within the dihedral group.
    pub fn inverse(self) -> AugmentOp {
        match self {
            AugmentOp::R90 => AugmentOp::R270,
            AugmentOp::R270 => AugmentOp::R90,
            other => other, // R180 and mirrors are involutions
        }
    }

    /// Whether the op needs a square plan.
    pub fn needs_square(self) -> bool {
        matches!(self, AugmentOp::R90 | AugmentOp::R270)
    }

    /// Dataset tag produced by augmenting D0 with this op.
    pub fn dataset_tag(self) -> DatasetTag {
        match self {
            AugmentOp::R90 => DatasetTag::D1,
            AugmentOp::R180 => DatasetTag::D2,
            AugmentOp::R270 => DatasetTag::D3,
            AugmentOp::MirrorV => DatasetTag::D4,
            AugmentOp::MirrorH => DatasetTag::D5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AugmentOp::R90 => "R90",
            AugmentOp::R180 => "R180",
            AugmentOp::R270 => "R270",
            AugmentOp::MirrorV => "MV",
            AugmentOp::MirrorH => "MH",
        }
    }
}

impl std::fmt::Display for AugmentOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Raw index map on one plan level. R90/R270 require `h == w`.
pub(crate) fn transform_plane<T: Copy>(src: &[T], h: usize, w: usize, op: AugmentOp) -> Vec<T> {
    let mut out = Vec::with_capacity(src.len());
    for r in 0..h {
        for c in 0..w {
            let v = match op {
                AugmentOp::R90 => src[(h - 1 - c) * w + r],
                AugmentOp::R180 => src[(h - 1 - r) * w + (w - 1 - c)],
                AugmentOp::R270 => src[c * w + (w - 1 - r)],
                AugmentOp::MirrorV => src[r * w + (w - 1 - c)],
                AugmentOp::MirrorH => src[(h - 1 - r) * w + c],
            };
            out.push(v);
        }
    }
    out
}

/// Applies `op` to every level of a configuration. Levels are never permuted.
pub fn apply_op(config: &CrackConfig, op: AugmentOp) -> Result<CrackConfig> {
    let geometry = config.geometry().clone();
    let (h, w) = (geometry.plan_height(), geometry.plan_width());
    if op.needs_square() && h != w {
        return Err(Error::NonSquarePlan {
            width: w,
            height: h,
            context: "90-degree rotation",
        });
    }
    let plane = h * w;
    let mut cells = Vec::with_capacity(config.cells().len());
    for level in 0..geometry.levels() {
        let src = &config.cells()[level * plane..(level + 1) * plane];
        cells.extend(transform_plane(src, h, w, op));
    }
    // A brick landing on a mask-false position means the mask is not
    // symmetric under this op.
    for row in 0..h {
        for col in 0..w {
            if !geometry.mask_at(row, col) {
                for level in 0..geometry.levels() {
                    if cells[(level * h + row) * w + col] != 0 {
                        return Err(Error::AsymmetricMask { op: op.name() });
                    }
                }
            }
        }
    }
    Ok(CrackConfig::from_cells_unchecked(geometry, cells))
}

/// Transforms the features of an instance; the label is copied bit-identically.
pub fn augment_instance(instance: &Instance, op: AugmentOp) -> Result<Instance> {
    Ok(Instance {
        config: apply_op(&instance.config, op)?,
        label: instance.label,
        origin: instance.origin,
    })
}

/// Composes a training set: D0 instances first, then one augmented block per
/// op, in the given order. Normalization parameters are copied from D0.
pub fn build_training_set(d0: &Dataset, ops: &[AugmentOp]) -> Result<Dataset> {
    for (i, op) in ops.iter().enumerate() {
        if ops[..i].contains(op) {
            return Err(Error::DuplicateOp { op: op.name() });
        }
    }
    if ops.is_empty() {
        return Ok(d0.clone());
    }
    let mut instances = d0.instances().to_vec();
    instances.reserve(d0.len() * ops.len());
    for &op in ops {
        for instance in d0.instances() {
            instances.push(augment_instance(instance, op)?);
        }
    }
    let mut parts = vec![d0.tag().clone()];
    parts.extend(ops.iter().map(|op| op.dataset_tag()));
    Ok(Dataset::from_parts(
        d0.geometry().clone(),
        DatasetTag::Combined(parts),
        d0.norm(),
        instances,
    ))
}

/// True when the fuel mask is invariant under the op (the geometry symmetry
/// check the lattice invariants call for).
pub fn mask_invariant(geometry: &crate::lattice::CoreGeometry, op: AugmentOp) -> bool {
    let (h, w) = (geometry.plan_height(), geometry.plan_width());
    if op.needs_square() && h != w {
        return false;
    }
    transform_plane(geometry.fuel_mask(), h, w, op) == geometry.fuel_mask()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{CoreGeometry, CrackConfig, MaskSpec};
    use crate::oracle::{generate_dataset, DirectionalMode, OracleConfig};
    use std::sync::Arc;

    fn geo(w: usize, h: usize, l: usize, spec: MaskSpec) -> Arc<CoreGeometry> {
        Arc::new(CoreGeometry::new(w, h, l, spec).unwrap())
    }

    #[test]
    fn mirror_vertical_index_map_hand_example() {
        // [[1, 0], [-1, 1]] -> [[0, 1], [1, -1]]
        let out = transform_plane(&[1i8, 0, -1, 1], 2, 2, AugmentOp::MirrorV);
        assert_eq!(out, vec![0, 1, 1, -1]);
    }

    #[test]
    fn rotate_180_index_map_hand_example() {
        // [[1, 0], [-1, 1]] -> [[1, -1], [0, 1]]
        let out = transform_plane(&[1i8, 0, -1, 1], 2, 2, AugmentOp::R180);
        assert_eq!(out, vec![1, -1, 0, 1]);
    }

    #[test]
    fn four_rotations_restore_original() {
        let g = geo(8, 8, 2, MaskSpec::Disk(3.2));
        for seed in 0..100u64 {
            let original = CrackConfig::random(g.clone(), 0.35, seed).unwrap();
            let mut x = original.clone();
            for _ in 0..4 {
                x = apply_op(&x, AugmentOp::R90).unwrap();
            }
            assert_eq!(x, original);
        }
    }

    #[test]
    fn ops_are_involutions_or_have_inverses() {
        let g = geo(7, 7, 3, MaskSpec::Disk(3.0));
        for seed in 0..20u64 {
            let x = CrackConfig::random(g.clone(), 0.4, seed).unwrap();
            for op in AugmentOp::ALL {
                let back = apply_op(&apply_op(&x, op).unwrap(), op.inverse()).unwrap();
                assert_eq!(back, x, "inverse failed for {op}");
            }
        }
    }

    #[test]
    fn group_laws_hold_cell_exact() {
        let g = geo(6, 6, 2, MaskSpec::Full);
        for seed in 0..20u64 {
            let x = CrackConfig::random(g.clone(), 0.5, seed).unwrap();
            let mv_mh = apply_op(&apply_op(&x, AugmentOp::MirrorV).unwrap(), AugmentOp::MirrorH)
                .unwrap();
            assert_eq!(mv_mh, apply_op(&x, AugmentOp::R180).unwrap());

            let r90_r90 =
                apply_op(&apply_op(&x, AugmentOp::R90).unwrap(), AugmentOp::R90).unwrap();
            assert_eq!(r90_r90, apply_op(&x, AugmentOp::R180).unwrap());

            let r90_r180 =
                apply_op(&apply_op(&x, AugmentOp::R90).unwrap(), AugmentOp::R180).unwrap();
            assert_eq!(r90_r180, apply_op(&x, AugmentOp::R270).unwrap());
        }
    }

    #[test]
    fn crack_count_preserved() {
        let g = geo(9, 9, 3, MaskSpec::Disk(4.0));
        let x = CrackConfig::random(g, 0.3, 5).unwrap();
        for op in AugmentOp::ALL {
            assert_eq!(apply_op(&x, op).unwrap().crack_count(), x.crack_count());
        }
    }

    #[test]
    fn rotation_rejects_non_square_plan() {
        let g = geo(4, 5, 1, MaskSpec::Disk(1.0));
        let x = CrackConfig::random(g, 0.5, 1).unwrap();
        assert!(matches!(
            apply_op(&x, AugmentOp::R90).unwrap_err(),
            Error::NonSquarePlan { .. }
        ));
        assert!(matches!(
            apply_op(&x, AugmentOp::R270).unwrap_err(),
            Error::NonSquarePlan { .. }
        ));
        // Mirrors and R180 stay valid on the mirror-symmetric disk mask.
        for op in [AugmentOp::R180, AugmentOp::MirrorV, AugmentOp::MirrorH] {
            assert!(apply_op(&x, op).is_ok());
        }
    }

    #[test]
    fn asymmetric_mask_is_detected() {
        // Mask true everywhere except one corner: no symmetry survives.
        let mut mask = vec![true; 9];
        mask[0] = false;
        let g = Arc::new(CoreGeometry::from_mask(3, 3, 1, mask).unwrap());
        let x = CrackConfig::random(g, 1.0, 0).unwrap();
        for op in AugmentOp::ALL {
            assert!(matches!(
                apply_op(&x, op).unwrap_err(),
                Error::AsymmetricMask { .. }
            ));
        }
    }

    #[test]
    fn mask_invariance_matches_construction() {
        let square = geo(10, 10, 1, MaskSpec::Disk(4.5));
        for op in AugmentOp::ALL {
            assert!(mask_invariant(&square, op));
        }
        let rect = geo(4, 5, 1, MaskSpec::Disk(1.0));
        assert!(mask_invariant(&rect, AugmentOp::MirrorV));
        assert!(mask_invariant(&rect, AugmentOp::MirrorH));
        assert!(mask_invariant(&rect, AugmentOp::R180));
        assert!(!mask_invariant(&rect, AugmentOp::R90));
    }

    fn small_d0(n: usize) -> Dataset {
        let g = geo(3, 3, 1, MaskSpec::Full);
        let oc = OracleConfig {
            baseline: 1.0,
            radial_scale: 1.0,
            directional_mode: DirectionalMode::OddX,
            break_weight: 0.1,
            noise_std: 0.5,
            seed: 9,
        };
        generate_dataset(g, &oc, n, (0.0, 1.0), 33).unwrap()
    }

    #[test]
    fn augment_instance_copies_label_bit_identically() {
        let d0 = small_d0(8);
        for instance in d0.instances() {
            for op in AugmentOp::ALL {
                let aug = augment_instance(instance, op).unwrap();
                assert_eq!(aug.label.to_bits(), instance.label.to_bits());
                assert_eq!(aug.origin, instance.origin);
            }
        }
    }

    #[test]
    fn build_training_set_counts_and_order() {
        let d0 = small_d0(6);
        let ops = [AugmentOp::R180, AugmentOp::MirrorV];
        let combined = build_training_set(&d0, &ops).unwrap();
        assert_eq!(combined.len(), 6 * 3);
        assert_eq!(combined.norm(), d0.norm());
        // Block order: D0 first, then one block per op in list order.
        for i in 0..6 {
            assert_eq!(combined.instances()[i], d0.instances()[i]);
            let d2 = augment_instance(&d0.instances()[i], AugmentOp::R180).unwrap();
            assert_eq!(combined.instances()[6 + i], d2);
            let d4 = augment_instance(&d0.instances()[i], AugmentOp::MirrorV).unwrap();
            assert_eq!(combined.instances()[12 + i], d4);
        }
        assert_eq!(
            combined.tag().to_string(),
            "combined:D0+D2+D4",
            "tag records the composition"
        );
    }

    #[test]
    fn empty_ops_returns_d0_unchanged() {
        let d0 = small_d0(5);
        let same = build_training_set(&d0, &[]).unwrap();
        assert_eq!(same.len(), d0.len());
        assert_eq!(same.tag(), d0.tag());
    }

    #[test]
    fn duplicate_op_is_rejected() {
        let d0 = small_d0(4);
        let err = build_training_set(&d0, &[AugmentOp::R90, AugmentOp::R90]).unwrap_err();
        assert!(matches!(err, Error::DuplicateOp { .. }));
    }

    #[test]
    fn paper_scale_multiplication_by_six() {
        let d0 = small_d0(6136);
        let combined = build_training_set(&d0, &AugmentOp::ALL).unwrap();
        assert_eq!(combined.len(), 36816);
    }
}
