use std::io::Write;
use std::path::Path;

use ici_core::convex_fn::{
    conjugate, generalized_inverse, inf_convolution, read_csv, write_csv, Extension, GridFunction, InfConvMethod,
    DEFAULT_TOL,
};
use ici_core::{Error, ExtendedValue};

use crate::args::TransformArgs;
use crate::config::Problems;
use crate::error::CliError;
use crate::output::{create, num, Table};

fn extension(s: &str) -> Option<Extension> {
    match s {
        "linear" => Some(Extension::Linear),
        "infinite" | "inf" => Some(Extension::Infinite),
        _ => None,
    }
}

fn ext_name(e: Extension) -> &'static str {
    match e {
        Extension::Linear => "linear",
        Extension::Infinite => "infinite",
    }
}

/// `# left = …` and `# right = …` comment lines, as written by this command.
fn declared_extensions(text: &str) -> (Option<Extension>, Option<Extension>) {
    let mut out = (None, None);
    for line in text.lines() {
        let Some(rest) = line.trim().strip_prefix('#') else {
            continue;
        };
        if let Some((k, v)) = rest.split_once('=') {
            match k.trim() {
                "left" => out.0 = extension(v.trim()),
                "right" => out.1 = extension(v.trim()),
                _ => {}
            }
        }
    }
    out
}

/// Reads a CSV function. Extensions come from the flags, then from the
/// file's comment header, then default to linear.
pub fn read_function(path: &Path, left: Option<Extension>, right: Option<Extension>) -> Result<GridFunction, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let (dl, dr) = declared_extensions(&text);
    let left = left.or(dl).unwrap_or(Extension::Linear);
    let right = right.or(dr).unwrap_or(Extension::Linear);
    read_csv(text.as_bytes(), left, right).map_err(|e| match e {
        Error::Parse { row, msg } => CliError::Config(vec![format!("{}: row {row}: {msg}", path.display())]),
        e => CliError::Config(vec![format!("{}: {e}", path.display())]),
    })
}

fn require_convex(f: &GridFunction, path: &Path) -> Result<(), CliError> {
    f.check_convex(DEFAULT_TOL).map_err(|e| match e {
        Error::NonConvex { index } => CliError::Config(vec![format!(
            "{}: not convex at breakpoint {} (x = {})",
            path.display(),
            index + 1,
            f.breakpoints()[index]
        )]),
        e => e.into(),
    })
}

fn write_function(f: &GridFunction, header: &[String], out: &mut Vec<u8>) -> Result<(), CliError> {
    for h in header {
        writeln!(out, "# {h}").expect("write to memory");
    }
    writeln!(out, "# left = {}", ext_name(f.left())).expect("write to memory");
    writeln!(out, "# right = {}", ext_name(f.right())).expect("write to memory");
    write_csv(f, &mut *out)?;
    Ok(())
}

pub fn run(args: TransformArgs) -> Result<bool, CliError> {
    let mut problems = Problems::default();
    let op = args.op.clone().unwrap_or_default();
    if !matches!(op.as_str(), "legendre" | "infconv" | "geninv") {
        problems.push("op", format!("expected legendre, infconv or geninv, got {op:?}"));
    }
    if args.function.is_none() {
        problems.push("fn", "required");
    }
    if op == "infconv" && args.with.is_none() {
        problems.push("with", "required for infconv");
    }
    if op == "geninv" {
        match &args.level {
            None => problems.push("level", "required for geninv"),
            Some(ls) => {
                for l in ls {
                    if l.is_nan() || *l == f64::NEG_INFINITY {
                        problems.push("level", format!("{l} is not a level"));
                    }
                }
            }
        }
    }
    let mut ext = |field: &str, v: &Option<String>| match v.as_deref() {
        None => None,
        Some(s) => {
            let e = extension(s);
            if e.is_none() {
                problems.push(field, format!("expected linear or infinite, got {s:?}"));
            }
            e
        }
    };
    let (left, right) = (ext("left", &args.left), ext("right", &args.right));
    problems.finish()?;

    let fpath = args.function.as_deref().expect("validated");
    let f = read_function(fpath, left, right)?;
    let mut header = vec![format!("op = {op}"), format!("fn = {}", fpath.display())];
    let mut buf = Vec::new();
    match op.as_str() {
        "legendre" => {
            require_convex(&f, fpath)?;
            write_function(&conjugate(&f)?, &header, &mut buf)?;
        }
        "infconv" => {
            let gpath = args.with.as_deref().expect("validated");
            let g = read_function(gpath, left, right)?;
            require_convex(&f, fpath)?;
            require_convex(&g, gpath)?;
            header.push(format!("with = {}", gpath.display()));
            write_function(&inf_convolution(&f, &g, InfConvMethod::Conjugacy)?, &header, &mut buf)?;
        }
        _ => {
            let mut t = Table::new(&["level", "x"]);
            for &l in args.level.as_deref().unwrap_or_default() {
                let x = generalized_inverse(&f, ExtendedValue::new(l)?)?;
                t.push(vec![num(l), num(x)]);
            }
            for h in &header {
                writeln!(buf, "# {h}").expect("write to memory");
            }
            t.write_to(&mut buf)?;
        }
    }
    match &args.out {
        Some(p) => create(p)?.write_all(&buf).map_err(|e| CliError::io(p, e))?,
        None => std::io::stdout().write_all(&buf).map_err(|e| CliError::io("stdout", e))?,
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comment_header_sets_extensions() {
        let (l, r) = declared_extensions("# op = legendre\n# left = infinite\n#right=linear\nx,value\n0,0\n");
        assert_eq!(l, Some(Extension::Infinite));
        assert_eq!(r, Some(Extension::Linear));
    }
}
