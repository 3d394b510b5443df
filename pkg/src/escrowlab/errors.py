"""Exception hierarchy shared by the ledger, contracts and analysis code."""


class EscrowLabError(Exception):
    """Base class for every error raised by this package."""


class ContractError(EscrowLabError):
    """A contract rejected a call. The ledger logs these instead of raising."""


class LedgerError(EscrowLabError):
    pass


class InvalidSignature(LedgerError):
    pass


class UnknownAccount(LedgerError):
    pass


class InsufficientFunds(LedgerError, ContractError):
    pass


class InvalidChoice(ContractError):
    pass


class WrongPhase(ContractError):
    pass


class AlreadyDeclared(ContractError):
    pass


class AlreadyCommitted(ContractError):
    pass


class WrongDepositAmount(ContractError):
    pass


class HashMismatch(ContractError):
    pass


class DefenseDisabled(ContractError):
    pass


class AlreadyRevealed(ContractError):
    pass


class GuessWindowClosed(ContractError):
    pass


class NotParty(ContractError):
    pass


class AlreadyClaimed(ContractError):
    pass


class NotOwner(ContractError):
    pass


class InvalidRelayedSignature(ContractError):
    pass


class OutOfOrderRound(ContractError):
    pass


class TooEarly(ContractError):
    pass


class TooLate(ContractError):
    pass


class AlreadySettled(ContractError):
    pass


class InvalidProof(ContractError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class StateSpaceTooLarge(EscrowLabError):
    pass


class HasSimultaneousStage(EscrowLabError):
    pass


class UnsettledTranscript(EscrowLabError):
    pass


class ConfigError(EscrowLabError):
    pass
