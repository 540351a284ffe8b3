//! The reversal layer passes activations through untouched and flips and
//! scales the gradient on the way back.

use darec::model::GradientReversal;

fn main() {
    let x = [0.25, -1.0, 3.5];
    let upstream = [1.0, 0.5, -2.0];
    for mu in [0.0, 0.5, 1.0, 10.0] {
        let layer = GradientReversal::new(mu);
        println!(
            "mu = {mu:>4}: forward {:?}  backward {:?}",
            layer.forward(&x),
            layer.backward(&upstream)
        );
    }
}
