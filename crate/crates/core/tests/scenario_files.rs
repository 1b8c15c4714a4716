use combat_core::scenarios::{builtin, builtin_names, resolve, Scenario};
use combat_core::Error;

fn temp_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("combat-core-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn saved_builtins_resolve_from_their_files() {
    let dir = temp_dir("files");
    for name in builtin_names() {
        let s = builtin(name).unwrap();
        let path = dir.join(format!("{name}.scenario"));
        s.save(&path).unwrap();
        let back = resolve(path.to_str().unwrap()).unwrap();
        assert_eq!(back, s, "{name}");
    }
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn overrides_survive_a_save() {
    let dir = temp_dir("overrides");
    let mut s = builtin("circle-pde").unwrap();
    s.apply_overrides(&["v.d=3e-4", "t_end=0.02"]).unwrap();
    let path = dir.join("c.scenario");
    s.save(&path).unwrap();
    let back = Scenario::load(&path).unwrap();
    assert_eq!(back.pde().unwrap().v.aimed_fire, 3e-4);
    assert_eq!(back.pde().unwrap().t_end, 0.02);
    assert_eq!(back.pde().unwrap().u.aimed_fire, 1e-5);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn unknown_names_and_missing_files() {
    match resolve("no-such-scenario") {
        Err(Error::UnknownScenario { valid, .. }) => assert_eq!(valid.len(), builtin_names().len()),
        other => panic!("{other:?}"),
    }
    let dir = temp_dir("broken");
    let path = dir.join("broken.scenario");
    std::fs::write(&path, "name = x\nengine = pde\nu.D = oops\n").unwrap();
    assert!(resolve(path.to_str().unwrap()).is_err());
    std::fs::remove_dir_all(dir).unwrap();
}
