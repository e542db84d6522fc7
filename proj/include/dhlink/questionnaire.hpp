#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dhlink/json.hpp"
#include "dhlink/store.hpp"

namespace dhlink {

enum class QuestionKind { SingleChoice, MultiChoice, NumericScale, FreeText };

std::string question_kind_name(QuestionKind kind);
QuestionKind question_kind_from_name(const std::string& name);

struct Question {
  std::string qid;
  std::string text;
  QuestionKind kind = QuestionKind::FreeText;
  std::vector<std::string> options;  // single-choice, multi-choice
  int64_t min = 0;                   // numeric-scale
  int64_t max = 0;
};

struct QuestionnaireDef {
  std::string questionnaire_id;
  std::string title;
  std::vector<Question> questions;
};

void to_json(Json& j, const Question& q);
void from_json(const Json& j, Question& q);
void to_json(Json& j, const QuestionnaireDef& d);
void from_json(const Json& j, QuestionnaireDef& d);

struct Answer {
  std::string qid;
  Json value;
};

struct QuestionnaireResponse {
  std::string user_token;
  std::string questionnaire_id;
  int64_t submitted_at = 0;
  std::vector<Answer> answers;
};

void to_json(Json& j, const QuestionnaireResponse& r);
void from_json(const Json& j, QuestionnaireResponse& r);

// Throws invalid-answer (naming the qid) when an answer does not fit its
// question: unknown qid, wrong value shape, option not offered, duplicate
// option, or a numeric value outside [min, max]. Questions may be left
// unanswered, but no qid may be answered twice.
void validate_response(const QuestionnaireDef& def,
                       const QuestionnaireResponse& response);

// Definitions plus response intake backed by a store. Responses land under
// responses/<userToken>/<questionnaireId>/<submittedAt>, so store watchers
// on that prefix see each accepted submission.
class QuestionnaireService {
 public:
  explicit QuestionnaireService(Store* store);

  void register_definition(const QuestionnaireDef& def);
  // Loads every *.json definition in the directory, skipping ids that are
  // already registered. Returns the number of newly registered definitions.
  int load_definitions_dir(const std::string& dir);
  const QuestionnaireDef& definition(const std::string& questionnaire_id) const;
  std::vector<std::string> questionnaire_ids() const;

  // Validates and persists; returns the store key.
  std::string submit_response(const QuestionnaireResponse& response);

  std::vector<QuestionnaireResponse> responses_for(
      const std::string& user_token) const;

 private:
  Store* store_;
  std::map<std::string, QuestionnaireDef> defs_;
};

}  // namespace dhlink
