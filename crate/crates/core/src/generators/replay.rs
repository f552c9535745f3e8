use std::fs;
use std::path::{Path, PathBuf};

use super::{Completion, GenerationError, GenerationRequest, Generator};

/// Serves completions recorded on disk as `<root>/<problem_id>/<sample_index>.txt`.
///
/// Path separators in problem ids are replaced by `_`. Samples are read
/// from index 0 upwards and stop at the first missing index, so a problem
/// directory with three files yields at most three completions.
#[derive(Debug, Clone)]
pub struct ReplayGenerator {
    root: PathBuf,
    tag: String,
}

impl ReplayGenerator {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        let root = root.into();
        let tag = format!("replay:{}", root.display());
        ReplayGenerator { root, tag }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn problem_dir(&self, problem_id: &str) -> PathBuf {
        self.root.join(problem_id.replace(['/', '\\'], "_"))
    }
}

impl Generator for ReplayGenerator {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Completion>, GenerationError> {
        request.validate()?;
        let dir = self.problem_dir(&request.problem_id);
        if !dir.is_dir() {
            return Err(GenerationError::MissingReplay {
                problem_id: request.problem_id.clone(),
                path: dir,
            });
        }
        let mut out = Vec::new();
        for sample_index in 0..request.num_samples {
            let path = dir.join(format!("{sample_index}.txt"));
            let text = match fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => break,
                Err(source) => {
                    return Err(GenerationError::Io {
                        problem_id: request.problem_id.clone(),
                        path,
                        source,
                    })
                }
            };
            out.push(Completion {
                text,
                sample_index,
                generator_tag: self.tag.clone(),
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{Phase, Task};

    #[test]
    fn reads_in_index_order() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("p1");
        fs::create_dir(&dir).unwrap();
        for i in [2, 0, 1] {
            fs::write(dir.join(format!("{i}.txt")), format!("sample {i}")).unwrap();
        }
        let g = ReplayGenerator::new(tmp.path());
        let req = GenerationRequest::new("p1", "", 3, Task::TestGen, Phase::Augmentation);
        let out = g.generate(&req).unwrap();
        assert_eq!(out.iter().map(|c| c.text.as_str()).collect::<Vec<_>>(), ["sample 0", "sample 1", "sample 2"]);
        assert_eq!(out, g.generate(&req).unwrap());
        let more = GenerationRequest { num_samples: 10, ..req.clone() };
        assert_eq!(g.generate(&more).unwrap().len(), 3);
        let fewer = GenerationRequest { num_samples: 2, ..req };
        assert_eq!(g.generate(&fewer).unwrap().len(), 2);
    }

    #[test]
    fn missing_problem() {
        let tmp = tempfile::tempdir().unwrap();
        let g = ReplayGenerator::new(tmp.path());
        let req = GenerationRequest::new("nope", "", 1, Task::CodeGen, Phase::Augmentation);
        let err = g.generate(&req).unwrap_err();
        assert!(matches!(err, GenerationError::MissingReplay { .. }));
        assert_eq!(err.problem_id(), Some("nope"));
    }
}
