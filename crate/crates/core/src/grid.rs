//! Cell-centered tensor-product grids on rectangles with no-flux boundaries,
//! and the discrete calculus every other module consumes.
//!
//! Layout: axis 0 varies fastest, so a 2D field stores `f[ix + nx*iy]`. Cell
//! centers sit at `(i + 1/2) h`. Ghost cells are reflections (ghost value =
//! adjacent interior value), which makes the total boundary flux vanish and
//! gives the discrete divergence theorem.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T: Scalar> {
    cells: Vec<usize>,
    lengths: Vec<T>,
    h: Vec<T>,
}

impl<T: Scalar> Grid<T> {
    /// 1D or 2D grid with at least 4 cells per axis.
    pub fn new(cells: &[usize], lengths: &[T]) -> Result<Self> {
        if cells.is_empty() || cells.len() > 2 || cells.len() != lengths.len() {
            return Err(Error::Config(format!(
                "grid must be 1D or 2D with matching cells/lengths, got {} / {}",
                cells.len(),
                lengths.len()
            )));
        }
        for (&n, &len) in cells.iter().zip(lengths) {
            if n < 4 {
                return Err(Error::Config(format!(
                    "need at least 4 cells per axis, got {n}"
                )));
            }
            if !(len > T::zero()) {
                return Err(Error::Config(format!(
                    "axis length must be positive, got {len}"
                )));
            }
        }
        let h = cells
            .iter()
            .zip(lengths)
            .map(|(&n, &len)| len / T::of(n as f64))
            .collect();
        Ok(Grid {
            cells: cells.to_vec(),
            lengths: lengths.to_vec(),
            h,
        })
    }

    pub fn line(n: usize, length: T) -> Result<Self> {
        Grid::new(&[n], &[length])
    }

    pub fn rect(nx: usize, ny: usize, lx: T, ly: T) -> Result<Self> {
        Grid::new(&[nx, ny], &[lx, ly])
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn lengths(&self) -> &[T] {
        &self.lengths
    }

    pub fn spacing(&self) -> &[T] {
        &self.h
    }

    pub fn total_cells(&self) -> usize {
        self.cells.iter().product()
    }

    /// |Omega|
    pub fn volume(&self) -> T {
        self.lengths.iter().fold(T::one(), |acc, &l| acc * l)
    }

    /// Volume of one cell (product of spacings).
    pub fn cell_volume(&self) -> T {
        self.h.iter().fold(T::one(), |acc, &h| acc * h)
    }

    pub fn cell_center(&self, axis: usize, i: usize) -> T {
        (T::of(i as f64) + T::of(0.5)) * self.h[axis]
    }

    /// Multi-index of a flat cell index.
    pub fn coords(&self, idx: usize) -> [usize; 2] {
        match self.dim() {
            1 => [idx, 0],
            _ => [idx % self.cells[0], idx / self.cells[0]],
        }
    }

    /// Physical position of a cell center.
    pub fn position(&self, idx: usize) -> [T; 2] {
        let c = self.coords(idx);
        let x = self.cell_center(0, c[0]);
        let y = if self.dim() == 2 {
            self.cell_center(1, c[1])
        } else {
            T::zero()
        };
        [x, y]
    }

    /// Number of faces orthogonal to `axis` (boundary faces included).
    pub fn face_count(&self, axis: usize) -> usize {
        let mut n = self.cells[axis] + 1;
        for (a, &c) in self.cells.iter().enumerate() {
            if a != axis {
                n *= c;
            }
        }
        n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field<T: Scalar> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Scalar> Field<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.total_cells() {
            return Err(Error::Config(format!(
                "field length {} does not match grid with {} cells",
                values.len(),
                grid.total_cells()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn constant(grid: &Grid<T>, c: T) -> Self {
        Field {
            grid: grid.clone(),
            values: vec![c; grid.total_cells()],
        }
    }

    /// Build from a function of the cell-center position `(x, y)`.
    pub fn from_fn(grid: &Grid<T>, mut f: impl FnMut(T, T) -> T) -> Self {
        let values = (0..grid.total_cells())
            .map(|idx| {
                let p = grid.position(idx);
                f(p[0], p[1])
            })
            .collect();
        Field {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> T {
        self.values.iter().fold(T::infinity(), |m, &v| m.min(v))
    }

    pub fn max(&self) -> T {
        self.values.iter().fold(T::neg_infinity(), |m, &v| m.max(v))
    }

    /// Midpoint-rule integral over the domain.
    pub fn integrate(&self) -> T {
        let sum: T = self.values.iter().copied().sum();
        sum * self.grid.cell_volume()
    }

    /// L^p norm, `p >= 1`.
    pub fn lp_norm(&self, p: T) -> Result<T> {
        if !(p >= T::one()) {
            return Err(Error::Domain(format!("lp_norm needs p >= 1, got {p}")));
        }
        let cv = self.grid.cell_volume();
        if p == T::one() {
            let s: T = self.values.iter().map(|v| v.abs()).sum();
            return Ok(s * cv);
        }
        if p == T::of(2.0) {
            let s: T = self.values.iter().map(|&v| v * v).sum();
            return Ok((s * cv).sqrt());
        }
        let s: T = self.values.iter().map(|v| v.abs().powf(p)).sum();
        Ok((s * cv).powf(T::one() / p))
    }

    pub fn linf_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Second-order Neumann Laplacian with reflection ghosts, summed over axes.
    pub fn laplacian_neumann(&self) -> Field<T> {
        let g = &self.grid;
        let mut out = vec![T::zero(); self.values.len()];
        match g.dim() {
            1 => {
                let n = g.cells[0];
                let inv_h2 = T::one() / (g.h[0] * g.h[0]);
                let f = &self.values;
                for i in 0..n {
                    let left = if i == 0 { f[0] } else { f[i - 1] };
                    let right = if i + 1 == n { f[n - 1] } else { f[i + 1] };
                    out[i] = (left - T::of(2.0) * f[i] + right) * inv_h2;
                }
            }
            _ => {
                let (nx, ny) = (g.cells[0], g.cells[1]);
                let inv_hx2 = T::one() / (g.h[0] * g.h[0]);
                let inv_hy2 = T::one() / (g.h[1] * g.h[1]);
                let f = &self.values;
                for iy in 0..ny {
                    for ix in 0..nx {
                        let c = ix + nx * iy;
                        let l = if ix == 0 { f[c] } else { f[c - 1] };
                        let r = if ix + 1 == nx { f[c] } else { f[c + 1] };
                        let d = if iy == 0 { f[c] } else { f[c - nx] };
                        let u = if iy + 1 == ny { f[c] } else { f[c + nx] };
                        out[c] = (l - T::of(2.0) * f[c] + r) * inv_hx2
                            + (d - T::of(2.0) * f[c] + u) * inv_hy2;
                    }
                }
            }
        }
        Field {
            grid: g.clone(),
            values: out,
        }
    }

    /// Face-normal differences `(f_R - f_L)/h` along `axis`; boundary faces
    /// are zero (no-flux). For axis 0 the faces are laid out
    /// `[ix_face + (nx+1)*iy]`, for axis 1 `[ix + nx*iy_face]`.
    pub fn face_gradient(&self, axis: usize) -> Vec<T> {
        let g = &self.grid;
        assert!(
            axis < g.dim(),
            "axis {axis} out of range for {}D grid",
            g.dim()
        );
        let mut faces = vec![T::zero(); g.face_count(axis)];
        let inv_h = T::one() / g.h[axis];
        let f = &self.values;
        match (g.dim(), axis) {
            (1, _) => {
                let n = g.cells[0];
                for i in 1..n {
                    faces[i] = (f[i] - f[i - 1]) * inv_h;
                }
            }
            (_, 0) => {
                let (nx, ny) = (g.cells[0], g.cells[1]);
                for iy in 0..ny {
                    for ix in 1..nx {
                        faces[ix + (nx + 1) * iy] = (f[ix + nx * iy] - f[ix - 1 + nx * iy]) * inv_h;
                    }
                }
            }
            (_, _) => {
                let (nx, ny) = (g.cells[0], g.cells[1]);
                for iy in 1..ny {
                    for ix in 0..nx {
                        faces[ix + nx * iy] = (f[ix + nx * iy] - f[ix + nx * (iy - 1)]) * inv_h;
                    }
                }
            }
        }
        faces
    }

    /// Cell-centered gradient component along `axis`: average of the two
    /// adjacent face gradients in the interior; boundary cells take the single
    /// interior face value (one-sided), which keeps the reconstruction exact
    /// for linear fields up to the wall.
    pub fn cell_gradient(&self, axis: usize) -> Vec<T> {
        let g = &self.grid;
        let faces = self.face_gradient(axis);
        let mut out = vec![T::zero(); self.values.len()];
        let half = T::of(0.5);
        match (g.dim(), axis) {
            (1, _) => {
                let n = g.cells[0];
                for i in 0..n {
                    out[i] = match i {
                        0 => faces[1],
                        i if i + 1 == n => faces[n - 1],
                        i => (faces[i] + faces[i + 1]) * half,
                    };
                }
            }
            (_, 0) => {
                let (nx, ny) = (g.cells[0], g.cells[1]);
                for iy in 0..ny {
                    for ix in 0..nx {
                        let fl = faces[ix + (nx + 1) * iy];
                        let fr = faces[ix + 1 + (nx + 1) * iy];
                        out[ix + nx * iy] = match ix {
                            0 => fr,
                            ix if ix + 1 == nx => fl,
                            _ => (fl + fr) * half,
                        };
                    }
                }
            }
            (_, _) => {
                let (nx, ny) = (g.cells[0], g.cells[1]);
                for iy in 0..ny {
                    for ix in 0..nx {
                        let fd = faces[ix + nx * iy];
                        let fu = faces[ix + nx * (iy + 1)];
                        out[ix + nx * iy] = match iy {
                            0 => fu,
                            iy if iy + 1 == ny => fd,
                            _ => (fd + fu) * half,
                        };
                    }
                }
            }
        }
        out
    }

    /// `sum_cells v^{-q+1} |grad v|^q h^dim` for `q >= 2`, with the
    /// cell-centered gradient reconstruction. `q = 2` is the Dirichlet
    /// quotient `integral |grad v|^2 / v`.
    pub fn weighted_gradient_functional(&self, q: T) -> Result<T> {
        if !(q >= T::of(2.0)) {
            return Err(Error::Domain(format!(
                "weighted gradient functional needs q >= 2, got {q}"
            )));
        }
        let minv = self.min();
        if !(minv > T::zero()) {
            return Err(Error::Positivity(format!(
                "weighted gradient functional needs v > 0 everywhere, min = {minv}"
            )));
        }
        let gx = self.cell_gradient(0);
        let gy = if self.grid.dim() == 2 {
            Some(self.cell_gradient(1))
        } else {
            None
        };
        let one = T::one();
        let two = T::of(2.0);
        let mut sum = T::zero();
        for (c, &v) in self.values.iter().enumerate() {
            let g2 = match &gy {
                Some(gy) => gx[c] * gx[c] + gy[c] * gy[c],
                None => gx[c] * gx[c],
            };
            let term = if q == two {
                g2 / v
            } else {
                v.powf(one - q) * g2.sqrt().powf(q)
            };
            sum += term;
        }
        Ok(sum * self.grid.cell_volume())
    }

    /// Serialize: header lines (`dim`, `cells`, `lengths`, optional `t`),
    /// then row-major cell values one per line.
    pub fn write_csv<W: Write>(&self, w: &mut W, t: Option<T>) -> Result<()> {
        writeln!(w, "# field v1")?;
        writeln!(w, "dim,{}", self.grid.dim())?;
        let cells: Vec<String> = self.grid.cells.iter().map(|c| c.to_string()).collect();
        writeln!(w, "cells,{}", cells.join(","))?;
        let lengths: Vec<String> = self.grid.lengths.iter().map(|l| format!("{l}")).collect();
        writeln!(w, "lengths,{}", lengths.join(","))?;
        if let Some(t) = t {
            writeln!(w, "t,{t}")?;
        }
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    /// Parse the layout written by [`Field::write_csv`]. Returns the field and
    /// the time stamp if one was recorded.
    pub fn read_csv<R: BufRead>(r: &mut R) -> Result<(Field<T>, Option<T>)> {
        let mut lines = r.lines();
        let mut header = |name: &str| -> Result<String> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Report(format!("field file truncated before '{name}'")))??;
            let line = line.trim().to_string();
            if name == "#" {
                return Ok(line);
            }
            let (key, rest) = line
                .split_once(',')
                .ok_or_else(|| Error::Report(format!("malformed field header line '{line}'")))?;
            if key != name {
                return Err(Error::Report(format!(
                    "expected header '{name}', got '{key}'"
                )));
            }
            Ok(rest.to_string())
        };
        let magic = header("#")?;
        if magic != "# field v1" {
            return Err(Error::Report(format!(
                "unrecognized field file header '{magic}'"
            )));
        }
        let dim: usize = header("dim")?
            .parse()
            .map_err(|_| Error::Report("bad dim in field file".into()))?;
        let cells: Vec<usize> = header("cells")?
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Report("bad cells in field file".into()))
            })
            .collect::<Result<_>>()?;
        let lengths: Vec<T> = header("lengths")?
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map(T::of)
                    .map_err(|_| Error::Report("bad lengths in field file".into()))
            })
            .collect::<Result<_>>()?;
        if cells.len() != dim || lengths.len() != dim {
            return Err(Error::Report("field header dims inconsistent".into()));
        }
        let grid = Grid::new(&cells, &lengths)?;
        let mut t = None;
        let mut values = Vec::with_capacity(grid.total_cells());
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("t,") {
                t = Some(T::of(
                    rest.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Report("bad t in field file".into()))?,
                ));
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|_| Error::Report(format!("bad value line '{line}'")))?;
            values.push(T::of(v));
        }
        Ok((Field::new(grid, values)?, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid1(n: usize) -> Grid<f64> {
        Grid::line(n, 1.0).unwrap()
    }

    #[test]
    fn constructor_validation() {
        assert!(Grid::<f64>::new(&[3], &[1.0]).is_err());
        assert!(Grid::<f64>::new(&[8], &[-1.0]).is_err());
        assert!(Grid::<f64>::new(&[8, 8, 8], &[1.0, 1.0, 1.0]).is_err());
        let g = Grid::<f64>::rect(8, 16, 2.0, 1.0).unwrap();
        assert_eq!(g.total_cells(), 128);
        assert_relative_eq!(g.volume(), 2.0);
        assert_relative_eq!(g.spacing()[0], 0.25);
    }

    #[test]
    fn integrate_basics() {
        let g = Grid::line(16, 2.0).unwrap();
        assert_relative_eq!(Field::constant(&g, 1.0).integrate(), 2.0);
        assert_relative_eq!(Field::constant(&g, 0.0).integrate(), 0.0);
        // midpoint rule is exact for linear integrands
        let g = grid1(256);
        let f = Field::from_fn(&g, |x, _| x);
        assert_relative_eq!(f.integrate(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn norms() {
        let g = grid1(64);
        let f = Field::constant(&g, -3.0);
        assert_relative_eq!(f.lp_norm(1.0).unwrap(), 3.0, epsilon = 1e-13);
        assert_relative_eq!(f.lp_norm(2.0).unwrap(), 3.0, epsilon = 1e-13);
        assert_relative_eq!(f.lp_norm(3.5).unwrap(), 3.0, epsilon = 1e-13);
        assert_relative_eq!(f.linf_norm(), 3.0);
        assert!(f.lp_norm(0.5).is_err());

        // indicator of half the cells on a volume-1 grid, p = 2
        let mut v = vec![0.0; 64];
        for x in v.iter_mut().take(32) {
            *x = 1.0;
        }
        let f = Field::new(grid1(64), v).unwrap();
        assert_relative_eq!(f.lp_norm(2.0).unwrap(), 0.5f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn laplacian_constant_and_divergence() {
        let g = grid1(32);
        let lap = Field::constant(&g, 4.2).laplacian_neumann();
        assert!(lap.values().iter().all(|&v| v == 0.0));

        // linear field: interior zero, boundary closure integrates to zero
        let f = Field::from_fn(&g, |x, _| x);
        let lap = f.laplacian_neumann();
        for i in 1..31 {
            assert_relative_eq!(lap.values()[i], 0.0, epsilon = 1e-9);
        }
        assert!(lap.integrate().abs() < 1e-12);
    }

    #[test]
    fn laplacian_cosine_accuracy() {
        let g = grid1(256);
        let f = Field::from_fn(&g, |x, _| (std::f64::consts::PI * x).cos());
        let lap = f.laplacian_neumann();
        let pi2 = std::f64::consts::PI.powi(2);
        let mut max_err: f64 = 0.0;
        for (c, &l) in lap.values().iter().enumerate() {
            let x = g.cell_center(0, c);
            max_err = max_err.max((l + pi2 * (std::f64::consts::PI * x).cos()).abs());
        }
        assert!(max_err < 1e-3, "max error {max_err}");
    }

    #[test]
    fn laplacian_second_order_convergence() {
        // zero-normal-derivative test function, 4-level refinement, 1D and 2D
        let pi = std::f64::consts::PI;
        let mut errors_1d = Vec::new();
        for &n in &[32usize, 64, 128, 256] {
            let g = grid1(n);
            let f = Field::from_fn(&g, |x, _| (pi * x).cos());
            let lap = f.laplacian_neumann();
            let mut err: f64 = 0.0;
            for (c, &l) in lap.values().iter().enumerate() {
                let x = g.cell_center(0, c);
                err = err.max((l + pi * pi * (pi * x).cos()).abs());
            }
            errors_1d.push(err);
        }
        for w in errors_1d.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.9, "1D observed order {order}");
        }

        let mut errors_2d = Vec::new();
        for &n in &[16usize, 32, 64, 128] {
            let g = Grid::rect(n, n, 1.0, 1.0).unwrap();
            let f = Field::from_fn(&g, |x, y| (pi * x).cos() * (pi * y).cos());
            let lap = f.laplacian_neumann();
            let mut err: f64 = 0.0;
            for (c, &l) in lap.values().iter().enumerate() {
                let p = g.position(c);
                err = err.max((l + 2.0 * pi * pi * (pi * p[0]).cos() * (pi * p[1]).cos()).abs());
            }
            errors_2d.push(err);
        }
        for w in errors_2d.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.9, "2D observed order {order}");
        }
    }

    #[test]
    fn face_gradient_linear_and_quadratic() {
        let g = grid1(32);
        let c = Field::constant(&g, 7.0);
        assert!(c.face_gradient(0).iter().all(|&v| v == 0.0));

        let f = Field::from_fn(&g, |x, _| 2.0 * x);
        let faces = f.face_gradient(0);
        assert_eq!(faces[0], 0.0);
        assert_eq!(faces[32], 0.0);
        for &v in &faces[1..32] {
            assert_relative_eq!(v, 2.0, epsilon = 1e-12);
        }

        // centered difference of a quadratic carries the exact 2x at the face
        let f = Field::from_fn(&g, |x, _| x * x);
        let faces = f.face_gradient(0);
        for i in 1..32 {
            let xf = i as f64 * g.spacing()[0];
            assert_relative_eq!(faces[i], 2.0 * xf, epsilon = 1e-13);
        }
    }

    /// Adaptive Simpson used as the independent quadrature oracle.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 0 { 2.0 } else { 4.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn weighted_gradient_functional_oracles() {
        let g = grid1(512);
        let c = Field::constant(&g, 3.0);
        assert_relative_eq!(c.weighted_gradient_functional(2.0).unwrap(), 0.0);

        // v = 1 + x: integral of 1/(1+x) on (0,1) is ln 2
        let v = Field::from_fn(&g, |x, _| 1.0 + x);
        let got = v.weighted_gradient_functional(2.0).unwrap();
        assert!((got - std::f64::consts::LN_2).abs() < 1e-3, "got {got}");

        // v = 2 + cos(pi x): oracle by quadrature of pi^2 sin^2(pi x)/(2 + cos(pi x))
        let pi = std::f64::consts::PI;
        let oracle = simpson(
            &|x: f64| pi * pi * (pi * x).sin().powi(2) / (2.0 + (pi * x).cos()),
            0.0,
            1.0,
            1 << 16,
        );
        assert_relative_eq!(oracle, 2.6445525288865481, max_relative = 1e-10);
        let v = Field::from_fn(&g, |x, _| 2.0 + (pi * x).cos());
        let got = v.weighted_gradient_functional(2.0).unwrap();
        assert!((got - oracle).abs() < 1e-3, "got {got}, oracle {oracle}");

        // positivity enforcement
        let v = Field::from_fn(&g, |x, _| x - 0.5);
        assert!(matches!(
            v.weighted_gradient_functional(2.0),
            Err(Error::Positivity(_))
        ));
        assert!(Field::constant(&g, 1.0)
            .weighted_gradient_functional(1.5)
            .is_err());
    }

    #[test]
    fn field_csv_round_trip() {
        let g = Grid::rect(8, 4, 1.0, 0.5).unwrap();
        let f = Field::from_fn(&g, |x: f64, y| 1.0 + x * y + (x * 13.7).sin());
        let mut buf = Vec::new();
        f.write_csv(&mut buf, Some(0.625)).unwrap();
        let (back, t) = Field::<f64>::read_csv(&mut buf.as_slice()).unwrap();
        assert_eq!(t, Some(0.625));
        assert_eq!(back, f);
    }

    proptest! {
        #[test]
        fn divergence_theorem(values in proptest::collection::vec(-10.0f64..10.0, 64)) {
            let f = Field::new(grid1(64), values).unwrap();
            let total = f.laplacian_neumann().integrate();
            prop_assert!(total.abs() <= 1e-12 * (1.0 + f.linf_norm()));
        }

        #[test]
        fn divergence_theorem_2d(values in proptest::collection::vec(-5.0f64..5.0, 8*6)) {
            let g = Grid::rect(8, 6, 1.0, 2.0).unwrap();
            let f = Field::new(g, values).unwrap();
            let total = f.laplacian_neumann().integrate();
            prop_assert!(total.abs() <= 1e-12 * (1.0 + f.linf_norm()));
        }

        #[test]
        fn holder_between_l1_and_lp(values in proptest::collection::vec(-1.0f64..1.0, 32), p in 1.0f64..6.0) {
            let f = Field::new(grid1(32), values).unwrap();
            let vol: f64 = 1.0;
            let l1 = f.lp_norm(1.0).unwrap();
            let lp = f.lp_norm(p).unwrap();
            prop_assert!(l1 <= vol.powf(1.0 - 1.0/p) * lp + 1e-12);
        }

        #[test]
        fn boundary_faces_zero(values in proptest::collection::vec(-10.0f64..10.0, 8*6)) {
            let g = Grid::rect(8, 6, 1.0, 1.0).unwrap();
            let f = Field::new(g.clone(), values).unwrap();
            let fx = f.face_gradient(0);
            let fy = f.face_gradient(1);
            for iy in 0..6 {
                prop_assert_eq!(fx[0 + 9*iy], 0.0);
                prop_assert_eq!(fx[8 + 9*iy], 0.0);
            }
            for ix in 0..8 {
                prop_assert_eq!(fy[ix], 0.0);
                prop_assert_eq!(fy[ix + 8*6], 0.0);
            }
        }
    }
}
