//! Binary test phantoms rasterized at pixel centers.

use crate::error::{Error, Result};
use crate::geometry::ImageGrid;
use crate::mask::Mask;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl Disk {
    /// Strict interior test.
    pub fn contains(&self, x: [f64; 2]) -> bool {
        (x[0] - self.cx).powi(2) + (x[1] - self.cy).powi(2) < self.r * self.r
    }
}

/// Shape catalog. Lengths are physical units.
#[derive(Debug, Clone, PartialEq)]
pub enum PhantomKind {
    Disk(Disk),
    /// Two separated disks laid out relative to the smaller grid extent.
    TwoDisks,
    /// Ring centered on the origin.
    Annulus { r_in: f64, r_out: f64 },
    BlobUnion(Vec<Disk>),
}

impl PhantomKind {
    pub fn name(&self) -> &'static str {
        match self {
            PhantomKind::Disk(_) => "disk",
            PhantomKind::TwoDisks => "two-disks",
            PhantomKind::Annulus { .. } => "annulus",
            PhantomKind::BlobUnion(_) => "blob-union",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub name: String,
    pub mask: Mask,
}

/// The two disks used by [`PhantomKind::TwoDisks`] on `grid`.
pub fn two_disk_layout(grid: &ImageGrid) -> [Disk; 2] {
    let w = grid.width().min(grid.height());
    [
        Disk { cx: -0.2 * w, cy: -0.1 * w, r: 0.17 * w },
        Disk { cx: 0.22 * w, cy: 0.18 * w, r: 0.13 * w },
    ]
}

fn check_radius(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("radius must be non-negative, got {r}")))
    }
}

pub fn make_phantom(kind: &PhantomKind, grid: &ImageGrid) -> Result<Phantom> {
    let inside: Box<dyn Fn([f64; 2]) -> bool> = match kind {
        PhantomKind::Disk(d) => {
            check_radius(d.r)?;
            let d = *d;
            Box::new(move |x| d.contains(x))
        }
        PhantomKind::TwoDisks => {
            let disks = two_disk_layout(grid);
            Box::new(move |x| disks.iter().any(|d| d.contains(x)))
        }
        PhantomKind::Annulus { r_in, r_out } => {
            check_radius(*r_in)?;
            check_radius(*r_out)?;
            if r_out <= r_in {
                return Err(Error::invalid(format!("annulus needs r_out > r_in, got {r_in}..{r_out}")));
            }
            let (a, b) = (r_in * r_in, r_out * r_out);
            Box::new(move |x| {
                let d2 = x[0] * x[0] + x[1] * x[1];
                d2 >= a && d2 < b
            })
        }
        PhantomKind::BlobUnion(disks) => {
            if disks.is_empty() {
                return Err(Error::invalid("blob union needs at least one disk"));
            }
            for d in disks {
                check_radius(d.r)?;
            }
            let disks = disks.clone();
            Box::new(move |x| disks.iter().any(|d| d.contains(x)))
        }
    };
    Ok(Phantom { name: kind.name().to_string(), mask: Mask::new(grid.centers().map(inside).collect()) })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn grid64() -> ImageGrid {
        ImageGrid::new(64, 64, 1.0).unwrap()
    }

    #[test]
    fn degenerate_and_full_disks() {
        let g = grid64();
        let empty = make_phantom(&PhantomKind::Disk(Disk { cx: 0.0, cy: 0.0, r: 0.0 }), &g).unwrap();
        assert_eq!(empty.mask.count(), 0);
        let full = make_phantom(&PhantomKind::Disk(Disk { cx: 0.0, cy: 0.0, r: 100.0 }), &g).unwrap();
        assert_eq!(full.mask.count(), g.len());
        assert!(make_phantom(&PhantomKind::Disk(Disk { cx: 0.0, cy: 0.0, r: -1.0 }), &g).is_err());
    }

    #[test]
    fn disk_area_matches_rasterization() {
        for &(ps, r) in &[(1.0, 20.0), (1.0, 7.5), (0.5, 9.0), (2.0, 30.0)] {
            let g = ImageGrid::new(64, 64, ps).unwrap();
            let m = make_phantom(&PhantomKind::Disk(Disk { cx: 0.3, cy: -0.2, r }), &g).unwrap().mask;
            let count = m.count() as f64;
            let ideal = PI * r * r / (ps * ps);
            assert!((count - ideal).abs() / ideal <= 3.0 / count.sqrt(), "r {r}: {count} vs {ideal}");
        }
    }

    #[test]
    fn catalog_shapes() {
        let g = grid64();
        let two = make_phantom(&PhantomKind::TwoDisks, &g).unwrap();
        assert_eq!(two.name, "two-disks");
        let [a, b] = two_disk_layout(&g);
        let expected = PI * (a.r * a.r + b.r * b.r);
        assert!((two.mask.count() as f64 - expected).abs() < 0.05 * expected);

        let ring = make_phantom(&PhantomKind::Annulus { r_in: 8.0, r_out: 16.0 }, &g).unwrap();
        assert!(!ring.mask.bits()[g.index(32, 32)]);
        assert!(ring.mask.bits()[g.index(32 + 12, 32)]);
        assert!(make_phantom(&PhantomKind::Annulus { r_in: 5.0, r_out: 5.0 }, &g).is_err());

        let blobs = vec![Disk { cx: -10.0, cy: 0.0, r: 5.0 }, Disk { cx: 10.0, cy: 0.0, r: 5.0 }];
        let u = make_phantom(&PhantomKind::BlobUnion(blobs), &g).unwrap();
        assert!(!u.mask.bits()[g.index(32, 32)]);
        assert!(make_phantom(&PhantomKind::BlobUnion(vec![]), &g).is_err());
    }

    #[test]
    fn deterministic() {
        let g = grid64();
        assert_eq!(make_phantom(&PhantomKind::TwoDisks, &g).unwrap(), make_phantom(&PhantomKind::TwoDisks, &g).unwrap());
    }
}
