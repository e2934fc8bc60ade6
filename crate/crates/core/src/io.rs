//! Plain-text formats: sample logs, profile files, the profile mini-syntax,
//! schedule and zeta files, Latin instances and optimizer traces.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! writer/reader pair here reproduces values bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::cost::{Schedule, Segment, Share, ZetaSequence};
use crate::error::{domain, Error, Result};
use crate::latinsq::LatinInstance;
use crate::optimizer::TraceLine;
use crate::profiles::{Family, Profile, Sample};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn num(line: usize, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| parse_err(line, format!("`{}` is not a number", s.trim())))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

// ---- sample logs -------------------------------------------------------

/// Parses `steps,solved` records; a first line whose first field is not a
/// number is taken as a header.
pub fn parse_samples(text: &str) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for (k, (line, l)) in content_lines(text).enumerate() {
        let mut fields = l.split(',').map(str::trim);
        let first = fields.next().unwrap_or("");
        if k == 0 && first.parse::<f64>().is_err() {
            continue;
        }
        let steps = first
            .parse::<u64>()
            .map_err(|_| parse_err(line, format!("`{first}` is not a step count")))?;
        let solved = match fields.next() {
            Some("1") => true,
            Some("0") => false,
            Some(f) => return Err(parse_err(line, format!("solved flag `{f}` must be 0 or 1"))),
            None => return Err(parse_err(line, "missing solved flag")),
        };
        if fields.next().is_some() {
            return Err(parse_err(line, "expected two fields"));
        }
        out.push(Sample { steps, solved });
    }
    Ok(out)
}

pub fn format_samples(samples: &[Sample]) -> String {
    let mut s = String::from("steps,solved\n");
    for x in samples {
        let _ = writeln!(s, "{},{}", x.steps, u8::from(x.solved));
    }
    s
}

// ---- profile files -----------------------------------------------------

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn put_family(fam: &Family, prefix: &str, out: &mut Vec<(String, String)>) {
    let mut put = |k: &str, v: String| out.push((format!("{prefix}{k}"), v));
    match fam {
        Family::Uniform { lo, hi } => {
            put("family", "uniform".into());
            put("lo", lo.to_string());
            put("hi", hi.to_string());
        }
        Family::Exponential { rate, shift } => {
            put("family", "exponential".into());
            put("rate", rate.to_string());
            put("shift", shift.to_string());
        }
        Family::TruncatedNormal { mean, sd } => {
            put("family", "truncated-normal".into());
            put("mean", mean.to_string());
            put("sd", sd.to_string());
        }
        Family::Lognormal { mu, sigma } => {
            put("family", "lognormal".into());
            put("mu", mu.to_string());
            put("sigma", sigma.to_string());
        }
        Family::Atoms(a) => {
            put("family", "atoms".into());
            put("points", join(a.points()));
            put("masses", join(a.masses()));
        }
        Family::PiecewiseLinear(p) => {
            let (t, f): (Vec<f64>, Vec<f64>) = p.knots().unzip();
            put("family", "piecewise-linear".into());
            put("knot_t", join(&t));
            put("knot_f", join(&f));
        }
        Family::Peaks { k, span } => {
            put("family", "peaks".into());
            put("k", k.to_string());
            put("span", span.to_string());
        }
        Family::Mixture { weights, components } => {
            put("family", "mixture".into());
            put("weights", join(weights));
            for (i, c) in components.iter().enumerate() {
                put_family(c, &format!("{prefix}c{i}."), out);
            }
        }
    }
}

/// Key-value text: `family`, its parameters, `p` and `horizon`. Mixture
/// components are nested under `c0.`, `c1.`, ... prefixes.
pub fn format_profile(profile: &Profile) -> String {
    let mut kv = Vec::new();
    put_family(profile.family(), "", &mut kv);
    kv.push(("p".into(), profile.p().to_string()));
    kv.push(("horizon".into(), profile.horizon().to_string()));
    kv.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

struct Keys {
    map: BTreeMap<String, (usize, String)>,
}

impl Keys {
    fn get(&self, key: &str) -> Result<(usize, &str)> {
        self.map
            .get(key)
            .map(|(l, v)| (*l, v.as_str()))
            .ok_or_else(|| domain(format!("profile file lacks `{key}`")))
    }

    fn f64(&self, key: &str) -> Result<f64> {
        let (l, v) = self.get(key)?;
        num(l, v)
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        let (l, v) = self.get(key)?;
        v.split(',').map(|x| num(l, x)).collect()
    }
}

fn get_family(keys: &Keys, prefix: &str) -> Result<Family> {
    let k = |name: &str| format!("{prefix}{name}");
    let (line, tag) = keys.get(&k("family"))?;
    let fam = match tag {
        "uniform" => Family::Uniform { lo: keys.f64(&k("lo"))?, hi: keys.f64(&k("hi"))? },
        "exponential" => Family::Exponential { rate: keys.f64(&k("rate"))?, shift: keys.f64(&k("shift"))? },
        "truncated-normal" => Family::TruncatedNormal { mean: keys.f64(&k("mean"))?, sd: keys.f64(&k("sd"))? },
        "lognormal" => Family::Lognormal { mu: keys.f64(&k("mu"))?, sigma: keys.f64(&k("sigma"))? },
        "atoms" => Family::atoms(keys.list(&k("points"))?, keys.list(&k("masses"))?)?,
        "piecewise-linear" => {
            let t = keys.list(&k("knot_t"))?;
            let f = keys.list(&k("knot_f"))?;
            if t.len() != f.len() {
                return Err(parse_err(line, "knot_t and knot_f differ in length"));
            }
            let knots: Vec<(f64, f64)> = t.into_iter().zip(f).collect();
            Family::piecewise_linear(&knots)?
        }
        "peaks" => {
            let (l, v) = keys.get(&k("k"))?;
            let count = v.parse().map_err(|_| parse_err(l, format!("`{v}` is not a count")))?;
            Family::Peaks { k: count, span: keys.f64(&k("span"))? }
        }
        "mixture" => {
            let weights = keys.list(&k("weights"))?;
            let components = (0..weights.len())
                .map(|i| get_family(keys, &format!("{prefix}c{i}.")))
                .collect::<Result<Vec<_>>>()?;
            Family::Mixture { weights, components }
        }
        other => return Err(parse_err(line, format!("unknown family `{other}`"))),
    };
    fam.validate()?;
    Ok(fam)
}

pub fn parse_profile(text: &str) -> Result<Profile> {
    let mut map = BTreeMap::new();
    for (line, l) in content_lines(text) {
        let (k, v) = l.split_once('=').ok_or_else(|| parse_err(line, "expected key=value"))?;
        if map.insert(k.trim().to_string(), (line, v.trim().to_string())).is_some() {
            return Err(parse_err(line, format!("duplicate key `{}`", k.trim())));
        }
    }
    let keys = Keys { map };
    let family = get_family(&keys, "")?;
    let p = keys.f64("p")?;
    match keys.map.get("horizon") {
        Some((l, v)) => Profile::with_horizon(family, p, num(*l, v)?),
        None => Profile::new(family, p),
    }
}

// ---- mini-syntax -------------------------------------------------------

/// Parses `family:param1:param2:p`:
/// `uniform:lo:hi:p`, `exp:rate:shift:p`, `tnormal:mean:sd:p`,
/// `lognormal:mu:sigma:p`, `peaks:k:span:p`, `atoms:10@0.5,40@0.5:p` and
/// `pwl:0@0,2@1:p` (time@F knots).
pub fn parse_profile_spec(spec: &str) -> Result<Profile> {
    let bad = |msg: &str| domain(format!("profile `{spec}`: {msg}"));
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let number = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("`{s}` is not a number")));
    let pairs = |s: &str| -> Result<Vec<(f64, f64)>> {
        s.split(',')
            .map(|x| {
                let (a, b) = x.split_once('@').ok_or_else(|| bad("expected value@weight pairs"))?;
                Ok((number(a.trim())?, number(b.trim())?))
            })
            .collect()
    };
    let arity = |k: usize| if parts.len() == k { Ok(()) } else { Err(bad(&format!("expected {} fields", k))) };
    let family = match parts[0] {
        "uniform" | "exp" | "tnormal" | "lognormal" | "peaks" => {
            arity(4)?;
            let (a, b) = (number(parts[1])?, number(parts[2])?);
            match parts[0] {
                "uniform" => Family::Uniform { lo: a, hi: b },
                "exp" => Family::Exponential { rate: a, shift: b },
                "tnormal" => Family::TruncatedNormal { mean: a, sd: b },
                "lognormal" => Family::Lognormal { mu: a, sigma: b },
                _ => {
                    if a.fract() != 0.0 || a < 1.0 {
                        return Err(bad("peak count must be a positive integer"));
                    }
                    Family::Peaks { k: a as usize, span: b }
                }
            }
        }
        "atoms" => {
            arity(3)?;
            let (points, masses) = pairs(parts[1])?.into_iter().unzip();
            Family::atoms(points, masses)?
        }
        "pwl" => {
            arity(3)?;
            Family::piecewise_linear(&pairs(parts[1])?)?
        }
        other => return Err(bad(&format!("unknown family `{other}`"))),
    };
    Profile::new(family, number(parts[parts.len() - 1])?)
}

// ---- schedules and zeta sequences ----------------------------------------

/// One segment per line as `process,duration,intensity`; processes sharing
/// a segment are joined with `;` and repeat the duration.
pub fn format_schedule(schedule: &Schedule) -> String {
    let mut s = String::new();
    for seg in schedule.segments() {
        let parts: Vec<String> = seg
            .shares
            .iter()
            .map(|sh| format!("{},{},{}", sh.process, seg.duration, sh.intensity))
            .collect();
        let _ = writeln!(s, "{}", parts.join(";"));
    }
    s
}

/// Reads a schedule file. `n_processes` defaults to one more than the
/// largest process index.
pub fn parse_schedule(text: &str, n_processes: Option<usize>) -> Result<Schedule> {
    let mut segments = Vec::new();
    for (line, l) in content_lines(text) {
        let mut duration = None;
        let mut shares = Vec::new();
        for part in l.split(';') {
            let f: Vec<&str> = part.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(parse_err(line, "expected process,duration,intensity"));
            }
            let process = f[0].parse().map_err(|_| parse_err(line, format!("`{}` is not a process index", f[0])))?;
            let d = num(line, f[1])?;
            if duration.is_some_and(|x| x != d) {
                return Err(parse_err(line, "shares of one segment must have the same duration"));
            }
            duration = Some(d);
            shares.push(Share { process, intensity: num(line, f[2])? });
        }
        segments.push((line, Segment::shared(duration.unwrap_or(0.0), shares)));
    }
    let n = n_processes.unwrap_or_else(|| {
        segments.iter().flat_map(|(_, s)| s.shares.iter().map(|x| x.process + 1)).max().unwrap_or(1)
    });
    // Validate per line first so errors point at the offending row.
    for (line, seg) in &segments {
        Schedule::new(n, vec![seg.clone()]).map_err(|e| parse_err(*line, e.to_string()))?;
    }
    Schedule::new(n, segments.into_iter().map(|(_, s)| s).collect())
}

pub fn format_zetas(z: &ZetaSequence) -> String {
    let mut s = format!("n={}\n", z.n_processes());
    for v in z.values() {
        let _ = writeln!(s, "{v}");
    }
    s
}

pub fn parse_zetas(text: &str) -> Result<ZetaSequence> {
    let mut lines = content_lines(text);
    let (line, head) = lines.next().ok_or_else(|| parse_err(1, "empty zeta file"))?;
    let n = head
        .strip_prefix("n=")
        .and_then(|v| v.trim().parse::<usize>().ok())
        .ok_or_else(|| parse_err(line, "expected `n=<processes>` header"))?;
    let values = lines.map(|(l, v)| num(l, v)).collect::<Result<Vec<_>>>()?;
    ZetaSequence::new(n, values)
}

// ---- Latin instances and traces ----------------------------------------

pub fn format_instance(inst: &LatinInstance) -> String {
    inst.to_string()
}

pub fn parse_instance(text: &str) -> Result<LatinInstance> {
    let mut lines = content_lines(text);
    let (line, head) = lines.next().ok_or_else(|| parse_err(1, "empty instance file"))?;
    let n: usize = head.parse().map_err(|_| parse_err(line, "first line must be the order n"))?;
    let mut cells = Vec::with_capacity(n * n);
    let mut rows = 0;
    for (line, l) in lines {
        let row = l
            .split_whitespace()
            .map(|x| x.parse::<u8>().map_err(|_| parse_err(line, format!("`{x}` is not a symbol"))))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != n {
            return Err(parse_err(line, format!("expected {n} symbols, found {}", row.len())));
        }
        cells.extend(row);
        rows += 1;
    }
    if rows != n {
        return Err(domain(format!("expected {n} rows, found {rows}")));
    }
    LatinInstance::new(n, cells)
}

/// `depth,zetas,partial_cost,decision` with zetas space-separated.
pub fn format_trace(lines: &[TraceLine]) -> String {
    let mut s = String::from("depth,zetas,partial_cost,decision\n");
    for t in lines {
        let z: Vec<String> = t.zetas.iter().map(f64::to_string).collect();
        let _ = writeln!(s, "{},{},{},{}", t.depth, z.join(" "), t.partial_cost, t.decision.label());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_with_and_without_header() {
        let a = parse_samples("steps,solved\n12,1\n40,0\n").unwrap();
        let b = parse_samples("12,1\n40,0\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a[1], Sample { steps: 40, solved: false });
        assert_eq!(parse_samples(&format_samples(&a)).unwrap(), a);
    }

    #[test]
    fn sample_errors_name_the_line() {
        let e = parse_samples("steps,solved\n3,1\n4,2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse_samples("3,1\nx,1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
    }

    #[test]
    fn profile_round_trip_is_exact() {
        let mix = Family::Mixture {
            weights: vec![0.5, 0.5],
            components: vec![
                Family::TruncatedNormal { mean: 0.6, sd: 0.2 },
                Family::TruncatedNormal { mean: 4.0, sd: 2.0 },
            ],
        };
        let profiles = [
            Profile::new(Family::Uniform { lo: 0.1, hi: 1.0 / 3.0 }, 0.7).unwrap(),
            Profile::new(Family::Exponential { rate: 3.0, shift: 0.0 }, 0.5).unwrap(),
            Profile::new(Family::Lognormal { mu: 5f64.ln(), sigma: 1.0 }, 1.0).unwrap(),
            Profile::new(Family::atoms(vec![10.0, 40.0, 160.0], vec![0.5, 0.25, 0.25]).unwrap(), 1.0).unwrap(),
            Profile::with_horizon(Family::piecewise_linear(&[(1.0, 0.0), (2.5, 0.3), (7.0, 1.0)]).unwrap(), 0.9, 50.0)
                .unwrap(),
            Profile::new(Family::Peaks { k: 3, span: 10.0 }, 1.0).unwrap(),
            Profile::new(mix, 1.0).unwrap(),
        ];
        for p in profiles {
            let text = format_profile(&p);
            let back = parse_profile(&text).unwrap();
            assert_eq!(back, p, "{text}");
        }
    }

    #[test]
    fn profile_file_errors() {
        assert!(matches!(parse_profile("family=uniform\nlo=0\nhi=1\np\n"), Err(Error::Parse { line: 4, .. })));
        assert!(matches!(parse_profile("family=cauchy\np=1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_profile("family=uniform\nlo=0\np=1\n").is_err());
    }

    #[test]
    fn mini_syntax() {
        let p = parse_profile_spec("uniform:0:1:1.0").unwrap();
        assert_eq!(p.family(), &Family::Uniform { lo: 0.0, hi: 1.0 });
        let p = parse_profile_spec("exp:3:0:0.5").unwrap();
        assert_eq!(p.p(), 0.5);
        let p = parse_profile_spec("atoms:10@0.5,40@0.25,160@0.25:1").unwrap();
        assert_eq!(p.cdf(40.0), 0.75);
        let p = parse_profile_spec("pwl:0@0,2@1:1").unwrap();
        assert_eq!(p.cdf(1.0), 0.5);
        assert_eq!(parse_profile_spec("peaks:4:100:1").unwrap().family(), &Family::Peaks { k: 4, span: 100.0 });
        for bad in ["uniform:0:1", "gamma:1:1:1", "exp:x:0:1", "atoms:10:1", "uniform:1:0:1"] {
            assert!(parse_profile_spec(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn schedule_round_trip() {
        let s = Schedule::new(
            2,
            vec![
                Segment::solo(0, 1.5),
                Segment::shared(0.25, vec![Share { process: 0, intensity: 0.5 }, Share { process: 1, intensity: 0.5 }]),
                Segment::solo(1, 3.0),
            ],
        )
        .unwrap();
        let text = format_schedule(&s);
        assert_eq!(text, "0,1.5,1\n0,0.25,0.5;1,0.25,0.5\n1,3,1\n");
        assert_eq!(parse_schedule(&text, None).unwrap(), s);
        let e = parse_schedule("0,1,1\n0,-1,1\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
    }

    #[test]
    fn zeta_round_trip() {
        let z = ZetaSequence::new(2, vec![10.0, 10.0, 40.0, 40.0, 160.0]).unwrap();
        let text = format_zetas(&z);
        assert!(text.starts_with("n=2\n"));
        assert_eq!(parse_zetas(&text).unwrap(), z);
        assert!(parse_zetas("2\n1\n").is_err());
        assert!(matches!(parse_zetas("n=2\n1\nfoo\n"), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn instance_round_trip() {
        let inst = LatinInstance::new(3, vec![1, 0, 0, 0, 0, 2, 0, 3, 0]).unwrap();
        let text = format_instance(&inst);
        assert_eq!(text, "3\n1 0 0\n0 0 2\n0 3 0\n");
        assert_eq!(parse_instance(&text).unwrap().cells(), inst.cells());
        assert!(matches!(parse_instance("2\n1 0\n0\n"), Err(Error::Parse { line: 3, .. })));
        assert!(parse_instance("2\n1 1\n0 0\n").is_err());
    }
}
