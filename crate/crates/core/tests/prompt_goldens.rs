mod support;

use medbench_core::corpus::default_tasks;
use medbench_core::prompt::{make_exemplar, render_prompt, IMAGE_PLACEHOLDER};
use support::goldens::{expected, golden_mismatches, load_fixtures};

#[test]
fn fixtures_match_goldens() {
    let tasks = default_tasks();
    let fixtures = load_fixtures();
    assert_eq!(fixtures.len(), 13);
    for fx in fixtures {
        let task = tasks.iter().find(|t| t.task_id == fx.task_id).unwrap();
        let exemplars: Vec<_> = fx.exemplars.iter().map(|s| make_exemplar(s, task).unwrap()).collect();
        let bundle = render_prompt(task, &fx.sample, &exemplars).unwrap();
        let (text, slots) = expected(&fx.name);
        assert_eq!(bundle.text, text, "{}", fx.name);
        assert_eq!(bundle.image_slots, slots, "{}", fx.name);
        assert_eq!(
            bundle.text.matches(IMAGE_PLACEHOLDER).count(),
            exemplars.iter().filter(|e| e.uses_placeholder).count()
        );
        assert_eq!(bundle.image_slots.len(), fx.sample.image_refs.len());
    }
    assert_eq!(golden_mismatches(), (vec![], 13));
}

#[test]
fn rendering_is_repeatable() {
    let tasks = default_tasks();
    for fx in load_fixtures() {
        let task = tasks.iter().find(|t| t.task_id == fx.task_id).unwrap();
        let ex: Vec<_> = fx.exemplars.iter().map(|s| make_exemplar(s, task).unwrap()).collect();
        let a = serde_json::to_string(&render_prompt(task, &fx.sample, &ex).unwrap()).unwrap();
        let b = serde_json::to_string(&render_prompt(task, &fx.sample, &ex).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
