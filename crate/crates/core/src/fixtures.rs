//! Bundled JSON inputs, regenerated by `cargo run --example gen_fixtures`.

use crate::baselines::zoo;
use crate::hwmodel::HardwareConfig;
use crate::splitspace::SearchSpace;

/// Sensor memory bound used with the toy spaces, small enough to bind.
pub const TOY_MEM_SEN: u64 = 400_000;

/// Hardware matching a space's view count.
pub fn hardware_for(space: &SearchSpace) -> HardwareConfig {
    if space.view_mode.is_multi() {
        HardwareConfig::with_sensors(space.view_mode.views())
    } else {
        HardwareConfig::single_view()
    }
}

/// `(file name, contents)` for every generated fixture.
pub fn generated() -> Vec<(String, String)> {
    let mut out = Vec::new();
    for name in zoo::NAMES {
        let net = zoo::by_name(name).expect("zoo name");
        out.push((format!("{name}.json"), net.to_json()));
    }
    out.push(("hw_single_view.json".into(), HardwareConfig::single_view().to_json()));
    out.push(("hw_multi_view.json".into(), HardwareConfig::multi_view().to_json()));
    out.push(("space_single_view.json".into(), SearchSpace::default_single_view().to_json()));
    out.push(("space_multi_view.json".into(), SearchSpace::default_multi_view(12).to_json()));
    for name in SearchSpace::TOYS {
        let space = SearchSpace::toy(name).expect("toy name");
        let hw = HardwareConfig { mem_sen: TOY_MEM_SEN, ..hardware_for(&space) };
        out.push((format!("space_{name}.json"), space.to_json()));
        out.push((format!("hw_{name}.json"), hw.to_json()));
    }
    for (_, text) in &mut out {
        text.push('\n');
    }
    out
}
