use std::path::Path;

use serde_json::json;
use toda_core::concentration::analyze;
use toda_core::fields::density_of;

use crate::context::{run_job, Ctx, Outcome};
use crate::error::CliError;
use crate::spec::FieldSpec;

pub fn psi(ctx: &Ctx, fields: &[String], out: Option<&Path>) -> Result<(), CliError> {
    let specs: Vec<FieldSpec> = fields.iter().map(|f| FieldSpec::parse(f, ctx.surface)).collect::<Result<_, _>>()?;
    let conc = ctx.concentration()?;
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| ctx.default_json("psi"));
    let config = json!({
        "surface": ctx.surface.name(), "level": ctx.level, "mesh": ctx.mesh,
        "concentration": conc, "fields": fields,
    });
    run_job("psi", &path, config, || {
        let m = ctx.mesh()?;
        let mut rows = Vec::new();
        let mut psis = Vec::new();
        for (text, spec) in fields.iter().zip(&specs) {
            let rep = analyze(&m, &density_of(&m, &spec.realize(&m)?)?, &conc)?;
            psis.push(rep.psi());
            rows.push(json!({ "field": text, "beta": rep.beta, "sigma": rep.sigma_f, "witness": rep.witness_p, "report": rep }));
        }
        let distance = (psis.len() == 2).then(|| psis[0].distance(&psis[1], ctx.surface));
        Ok(Outcome { result: json!({ "fields": rows, "psi_distance": distance }), checks: vec![] })
    })
}
