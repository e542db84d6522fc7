#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dhlink {

// Platform-wide error codes. The string names (error_code_name) are the wire
// form used in HTTP error bodies and CLI diagnostics.
enum class ErrorCode {
  BadRequest,
  IoError,
  // envelope / schema
  MalformedEnvelope,
  NonEncodable,
  SchemaViolation,
  // broker
  DuplicateName,
  UnknownTopic,
  UnknownSection,
  UnknownSchema,
  TopicRetired,
  TopicNotReady,
  EnvelopeMismatch,
  NotSectionOwner,
  // security
  NotAdmin,
  UnknownService,
  BadCredential,
  DuplicateEntry,
  UnknownEntry,
  ActiveKeyExists,
  NotFound,
  Deny,
  DecryptFailure,
  // discovery
  UnknownName,
  IllegalTransition,
  // connector
  Unauthorized,
  KeyUnavailable,
  BrokerUnreachable,
  // admin lifecycle
  DuplicateApp,
  UnknownApp,
  MalformedProposal,
  WrongState,
  ConnectivityCheckFailed,
  NotConfirmed,
  AdminLocked,
  // health services
  MixedUserInput,
  UnknownConfirmedToken,
  UnknownQuestionnaire,
  InvalidAnswer,
  DuplicateUser,
  // scenario harness
  InfeasiblePlant,
  SetupIncomplete,
  EndpointUnreachable,
};

const char* error_code_name(ErrorCode code);
ErrorCode error_code_from_name(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace dhlink
