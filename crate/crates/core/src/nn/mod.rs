pub mod conv;
pub mod dense;
pub mod loss;
pub mod network;
pub mod pool;
pub mod qconv;
pub mod window;

pub use conv::ClassicalConv;
pub use dense::Dense;
pub use loss::{argmax, mse_loss, one_hot};
pub use network::{Gradients, Layer, LayerSpec, Network, NetworkSpec, Trace};
pub use pool::{MaxPool, PoolMode};
pub use qconv::QuantumConv;
pub use window::{extract_windows, output_shape, Window, WindowPlan, WindowSpec};
