use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{Grid2D, LevelSetField2D};
use crate::error::{Error, Result};

/// Grid dump: a `nx,ny,spacing,time` header, its values, then one CSV row
/// per grid line `iy`.
pub fn write_grid<W: Write>(mut w: W, field: &LevelSetField2D) -> Result<()> {
    let g = field.grid;
    writeln!(w, "nx,ny,spacing,time")?;
    writeln!(w, "{},{},{},{}", g.nx, g.ny, g.spacing, field.time)?;
    for row in field.values.chunks(g.nx) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_grid<R: BufRead>(r: R) -> Result<LevelSetField2D> {
    let mut lines = r.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Parse("truncated grid dump".into()))?
            .map_err(Error::from)
    };
    if next()?.trim() != "nx,ny,spacing,time" {
        return Err(Error::Parse("missing grid header".into()));
    }
    let head = next()?;
    let parts: Vec<&str> = head.trim().split(',').collect();
    if parts.len() != 4 {
        return Err(Error::Parse(format!("bad grid header `{head}`")));
    }
    let bad = |s: &str| Error::Parse(format!("bad number `{s}`"));
    let nx: usize = parts[0].parse().map_err(|_| bad(parts[0]))?;
    let ny: usize = parts[1].parse().map_err(|_| bad(parts[1]))?;
    let spacing: f64 = parts[2].parse().map_err(|_| bad(parts[2]))?;
    let time: f64 = parts[3].parse().map_err(|_| bad(parts[3]))?;
    let grid = Grid2D::new(nx, ny, spacing)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..ny {
        let line = next()?;
        for s in line.trim().split(',') {
            values.push(s.parse::<f64>().map_err(|_| bad(s))?);
        }
    }
    let mut f = LevelSetField2D::new(grid, values)?;
    f.time = time;
    Ok(f)
}

/// A contour piece; periodic wrap-around is unrolled so consecutive points
/// are always neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

impl Polyline {
    /// Signed shoelace area (closed polylines only; 0 otherwise).
    pub fn area(&self) -> f64 {
        if !self.closed || self.points.len() < 3 {
            return 0.0;
        }
        let n = self.points.len();
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (self.points[i], self.points[(i + 1) % n]);
                a.0 * b.1 - b.0 * a.1
            })
            .sum::<f64>()
    }
}

/// Marching squares on the periodic grid for the curve γ̃ = `level`.
pub fn contours(field: &LevelSetField2D, level: f64) -> Vec<Polyline> {
    let g = field.grid;
    let (nx, ny, h) = (g.nx, g.ny, g.spacing);
    let u = |ix: usize, iy: usize| field.values[g.index(ix % nx, iy % ny)] - level;
    // crossing points live on edges: id 2k is the edge from node k along +x,
    // 2k + 1 along +y
    let mut points: HashMap<usize, (f64, f64)> = HashMap::new();
    let mut point = |ix: usize, iy: usize, along_y: bool| -> usize {
        let (ix, iy) = (ix % nx, iy % ny);
        let id = 2 * g.index(ix, iy) + along_y as usize;
        points.entry(id).or_insert_with(|| {
            let a = u(ix, iy);
            let b = if along_y { u(ix, iy + 1) } else { u(ix + 1, iy) };
            let t = a / (a - b);
            if along_y {
                (ix as f64 * h, (iy as f64 + t) * h)
            } else {
                ((ix as f64 + t) * h, iy as f64 * h)
            }
        });
        id
    };
    let mut segments: Vec<(usize, usize)> = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            let c = [u(ix, iy), u(ix + 1, iy), u(ix + 1, iy + 1), u(ix, iy + 1)];
            let case = c
                .iter()
                .enumerate()
                .fold(0, |m, (i, v)| m | ((*v > 0.0) as usize) << i);
            if case == 0 || case == 15 {
                continue;
            }
            // edges: 0 bottom, 1 right, 2 top, 3 left
            let mut e = |k: usize| match k {
                0 => point(ix, iy, false),
                1 => point(ix + 1, iy, true),
                2 => point(ix, iy + 1, false),
                _ => point(ix, iy, true),
            };
            let centre_above = c.iter().sum::<f64>() > 0.0;
            let pairs: &[(usize, usize)] = match case {
                1 | 14 => &[(3, 0)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(3, 1)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(3, 2)],
                5 if centre_above => &[(3, 2), (0, 1)],
                5 => &[(3, 0), (1, 2)],
                10 if centre_above => &[(3, 0), (1, 2)],
                _ => &[(3, 2), (0, 1)],
            };
            for &(a, b) in pairs {
                segments.push((e(a), e(b)));
            }
        }
    }
    let mut by_point: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        by_point.entry(a).or_default().push(s);
        by_point.entry(b).or_default().push(s);
    }
    let (lx, ly) = (g.length_x(), g.length_y());
    let unwrap = |prev: (f64, f64), p: (f64, f64)| {
        let shift = |d: f64, l: f64| (d / l).round() * l;
        (p.0 - shift(p.0 - prev.0, lx), p.1 - shift(p.1 - prev.1, ly))
    };
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        // walk forward from b, then backward from a
        let mut walk = |from: usize| -> (Vec<usize>, bool) {
            let mut ids = Vec::new();
            let mut cur = from;
            loop {
                let next_seg = by_point[&cur].iter().copied().find(|&s| !used[s]);
                match next_seg {
                    Some(s) => {
                        used[s] = true;
                        let (p, q) = segments[s];
                        cur = if p == cur { q } else { p };
                        ids.push(cur);
                    }
                    None => return (ids, cur == a),
                }
            }
        };
        let (fwd, closed) = walk(b);
        let mut ids = vec![a, b];
        if closed {
            ids.extend(fwd.into_iter().take_while(|&p| p != a));
        } else {
            ids.extend(fwd);
            let (back, _) = walk(a);
            let mut rev: Vec<usize> = back.into_iter().rev().collect();
            rev.extend(ids);
            ids = rev;
        }
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(ids.len());
        for id in ids {
            let p = points[&id];
            pts.push(match pts.last() {
                Some(&prev) => unwrap(prev, p),
                None => p,
            });
        }
        out.push(Polyline { points: pts, closed });
    }
    out
}

/// Contour CSV `level,polyline,closed,vertex,x,y` for one or more levels.
pub fn write_contours<W: Write>(mut w: W, levels: &[(f64, Vec<Polyline>)]) -> Result<()> {
    writeln!(w, "level,polyline,closed,vertex,x,y")?;
    for (level, lines) in levels {
        for (i, line) in lines.iter().enumerate() {
            for (k, (x, y)) in line.points.iter().enumerate() {
                writeln!(w, "{level},{i},{},{k},{x},{y}", line.closed)?;
            }
        }
    }
    Ok(())
}
