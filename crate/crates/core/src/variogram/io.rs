use std::io::{Read, Write};

use super::{EmpiricalVariogram, FittedModel, Structure, StructureKind, VariogramModel};
use crate::error::{Error, Result};

pub const EMPIRICAL_HEADER: [&str; 4] = ["param", "bin_center_km", "gamma_hat", "pair_count"];

/// Rows have 3, 6 or 9 fields depending on the number of structures, so the
/// header is written as a comment line.
pub const MODEL_HEADER: &str = "# param,nugget,kind1,c1,r1[,kind2,c2,r2],wls_objective";

pub fn write_empirical_csv<W: Write>(out: W, rows: &[(String, EmpiricalVariogram)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EMPIRICAL_HEADER)?;
    for (param, ev) in rows {
        for i in 0..ev.len() {
            w.write_record([
                param.clone(),
                ev.bin_centers[i].to_string(),
                ev.gamma_hat[i].to_string(),
                ev.pair_counts[i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_models_csv<W: Write>(mut out: W, rows: &[(String, FittedModel)]) -> Result<()> {
    writeln!(out, "{MODEL_HEADER}")?;
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    for (param, fit) in rows {
        let mut rec = vec![param.clone(), fit.model.nugget.to_string()];
        for s in &fit.model.structures {
            rec.extend([s.kind.as_str().to_string(), s.sill.to_string(), s.range.to_string()]);
        }
        rec.push(fit.objective.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Parameter name, model and stored objective for each record.
pub fn read_models_csv<R: Read>(input: R) -> Result<Vec<(String, VariogramModel, f64)>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let err = |message: String| Error::Parse { line, message };
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| err(format!("field {}: {e}", i + 1)))
        };
        let n_struct = match rec.len() {
            3 => 0,
            6 => 1,
            9 => 2,
            n => return Err(err(format!("expected 3, 6 or 9 fields, got {n}"))),
        };
        let structures = (0..n_struct)
            .map(|k| {
                let base = 2 + 3 * k;
                let kind: StructureKind = rec[base].parse().map_err(err)?;
                Ok(Structure {
                    kind,
                    sill: num(base + 1)?,
                    range: num(base + 2)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let model = VariogramModel::new(num(1)?, structures).map_err(|e| err(e.to_string()))?;
        out.push((rec[0].to_string(), model, num(rec.len() - 1)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::ModelFamily;
    use super::*;

    #[test]
    fn model_round_trip() {
        let nested = VariogramModel::new(
            0.05,
            vec![
                Structure {
                    kind: StructureKind::Spherical,
                    sill: 0.4,
                    range: 63.25,
                },
                Structure {
                    kind: StructureKind::HoleEffectSine,
                    sill: 0.1,
                    range: 12.0,
                },
            ],
        )
        .unwrap();
        let rows = vec![
            (
                "a0".to_string(),
                FittedModel {
                    family: nested.family(),
                    model: nested.clone(),
                    objective: 1.5,
                },
            ),
            (
                "b2".to_string(),
                FittedModel {
                    family: ModelFamily::nugget(),
                    model: VariogramModel::pure_nugget(0.25),
                    objective: 0.0,
                },
            ),
        ];
        let mut buf = Vec::new();
        write_models_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("a0,0.05,spherical,0.4,63.25,hole_effect,0.1,12,1.5"));
        assert!(text.contains("b2,0.25,0\n"));
        let back = read_models_csv(buf.as_slice()).unwrap();
        assert_eq!(back[0], ("a0".to_string(), nested, 1.5));
        assert_eq!(back[1].1, VariogramModel::pure_nugget(0.25));
    }

    #[test]
    fn bad_record_reports_line() {
        let text = "# header\nx,0.1,0\nx,0.1,spherical,1\n";
        match read_models_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empirical_header() {
        let ev = EmpiricalVariogram {
            bin_centers: vec![10.5],
            gamma_hat: vec![0.25],
            pair_counts: vec![3],
        };
        let mut buf = Vec::new();
        write_empirical_csv(&mut buf, &[("alpha1".into(), ev)]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "param,bin_center_km,gamma_hat,pair_count\nalpha1,10.5,0.25,3\n"
        );
    }
}
