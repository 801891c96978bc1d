use std::collections::BTreeMap;

use super::{AutodiffError, Tape, Tensor, Var};

/// Parameter handles for one evaluation of a program under test.
pub type ParamVars = BTreeMap<String, Var>;

fn evaluate<F>(program: &F, params: &BTreeMap<String, Tensor>) -> Result<(Tape, Var), AutodiffError>
where
    F: Fn(&mut Tape, &ParamVars) -> Result<Var, AutodiffError>,
{
    let mut tape = Tape::new();
    let vars = params
        .iter()
        .map(|(name, t)| (name.clone(), tape.param(name.clone(), t.clone())))
        .collect();
    let out = program(&mut tape, &vars)?;
    Ok((tape, out))
}

fn scalar_of(tape: &Tape, v: Var) -> Result<f64, AutodiffError> {
    tape.value(v)
        .item()
        .ok_or_else(|| AutodiffError::NotScalar {
            shape: tape.value(v).shape().to_vec(),
        })
}

/// Largest `|autodiff - central difference| / max(1, |central difference|)`
/// over every entry of every parameter.
pub fn check_gradients<F>(
    program: F,
    params: &BTreeMap<String, Tensor>,
    step: f64,
) -> Result<f64, AutodiffError>
where
    F: Fn(&mut Tape, &ParamVars) -> Result<Var, AutodiffError>,
{
    if !(step > 0.0) {
        return Err(AutodiffError::InvalidStep(step));
    }
    let (tape, loss) = evaluate(&program, params)?;
    let grads = tape.backward(loss)?;

    let mut worst: f64 = 0.0;
    let mut probe = params.clone();
    for (name, tensor) in params {
        for i in 0..tensor.len() {
            let orig = tensor.data()[i];
            probe.get_mut(name).unwrap().data_mut()[i] = orig + step;
            let (t, v) = evaluate(&program, &probe)?;
            let plus = scalar_of(&t, v)?;
            probe.get_mut(name).unwrap().data_mut()[i] = orig - step;
            let (t, v) = evaluate(&program, &probe)?;
            let minus = scalar_of(&t, v)?;
            probe.get_mut(name).unwrap().data_mut()[i] = orig;

            let numeric = (plus - minus) / (2.0 * step);
            let analytic = grads.get(name).map_or(0.0, |g| g.data()[i]);
            worst = worst.max((analytic - numeric).abs() / numeric.abs().max(1.0));
        }
    }
    Ok(worst)
}
