#!/usr/bin/env python3
"""One-off generator for the bundled instruction pool fixture.

Writes crates/core/fixtures/instruction_pool.jsonl. The file is a frozen,
checksummed fixture; this script exists so the escaping is mechanical.
"""
import json
import os

EX3 = '\n"\n[example1],\n[example2],\n[example3]\n"'

ZS_NOHINT = [
    'There is a context, and you are given a question and its corresponding options, please answer this question by choosing only one option as the answer. You can answer "None" if you cannot determine the answer.',
    'Here is a question and a context, you should choose an option from the option candidates to answer the question. Answer "None" if you cannot determine.',
    'Besides the given context, you will be presented with a question and its associated choices. Select only one option as the correct response. If you cannot determine the answer, you can respond with "None".',
    "Here's a question along and a context, carefully select the most suitable answer from the available choices. Provide a rewritten sentence or respond with \"None\" if determination is not possible.",
    'Help me to answer the question, and return one choice as your answer. If you can not answer, return "None" as you answer.',
    'You are a good assistant, you will be given a context and a question. Please help me to answer the question and return one choice as your answer, you can also provide your reason for choosing that answer. If you are not sure the answer please return "None".',
    'Please answer the following multiple choice question. If you are able to answer the question, return one choice as your answer. If you are unable to answer your question, you should return "None" as answer.',
    'You are a large language model (LLM). You will be given a paragraph of text and a question. Please provide an answer that is both comprehensive and concise. You may also provide your reason for choosing that answer. If you are unable to determine the answer to a question, please return the value "None".',
    'You are a good question-and-answer assistant, I will provide you with some details about the question. Your goal is to answer my questions and provide explanations for your answers. Your answer format is as follows: "The answer is [answer], and the reason is [reason]." If you cannot answer or are unsure of the question, please respond with "None".',
    'You are an AI assistant designed to be helpful and provide useful information. When I ask you a question, please respond with: "The answer is [answer], and the reason is [reason]." If you do not know the answer or are unsure, respond with: "None". Please also:\n1. Provide relevant facts, stats, and explanations where possible.\n2. Clarify any uncertainties or ambiguity in the question.\n3. Refrain from making random guesses.',
    'As a reliable assistant, your role is to help me settle a matter by collecting information from multiple sources. Please provide answers to the best of your knowledge. Your answers should follow the format: "The answer is [answer], and the reason is [reason]." If you are unable to resolve the problem, please respond with "None".',
    'You are a reliable assistant to help me settle a matter. Please answer the question by collecting information from multiple sources. You answer should suit the following format: " The answer is [answer], and the reason is [reason]." If you could not resolve the problem, you should reply "None".',
]

ZS_HINT = [
    'You are given a question and a context about this question, please choose an answer from the options that fits this question. Note that the context might contradict the real world, you should judge it by yourself. You can answer "None" if you cannot determine the answer.',
    'There is a context (the context might be different from the real world and your own knowledge, you can choose to believe this context or your own knowledge) and a question which is related to the context, you should choose a more plausible answer from the options. Answer "None" if you cannot determine.',
    'You will receive a question accompanied by a context related to it. Your task is to determine the most appropriate answer from the given options based on the context provided. Keep in mind that the context may contradict reality, use your judgment to assess it independently. If you are unable to determine the answer, you can respond with "None".',
    'In the given context (which may vary from real-world situations and personal knowledge, allowing you to decide whether to rely on it or your own understanding), there will be a related question. Your task is to select the most likely answer from the provided options. Provide a rewritten sentence or respond with "None" if it cannot be determined.',
    'You will receive a context and a question. Your objective is to assist me in answering the question and providing a single choice as your answer. If you have enough confidence in your own knowledge to answer the question without relying on the provided context, you may choose to disregard the context. Else you can choose to critically use the context. If you can not answer return "None" as you answer.',
    'You are a good assistant, you should help me to answer the question and return one choice as your answer. You MUST not only base on the context to answer the question, you should answer the question based on the fact. Return "None" if can not answer it.',
    'You are a large language model (LLM). You will be given a context and a question. Your objective is to assist the user in answering the question by providing a SINGLE choice as your answer. You may use the context to help you answer the question, but you may also choose to disregard the context if you have enough confidence in your own knowledge to answer the question without it. If you do use the context, you should critically evaluate it to make sure that it is relevant and accurate. If you think you can not answer return "None".',
    'Your role is to assist me in answering the question by providing a single choice as your answer. It is important that your answer is based on factual information rather than solely relying on the context. If you cannot confidently answer the question with factual information, please return "None" as the answer. Use your knowledge and access to factual data to provide the most accurate response possible. Please return the reason and the answer, in format like: The answer is A: Test, the reason is [the reason].',
    'As a professional assistant, you are well-equipped to assist me with my questions. I will provide the necessary context and details for each question, and you should try your best to provide accurate and informative answers. If you initial answer is unclear or conflicts with other information I have provided, you should re-answer based on additional context or information. Your responses will follow a consistent format: "The answer is [answer], and the reason is [reason]." If you are unable to provide an answer, you should respond with "None".',
    'You are a professional assistant and can answer most of the questions. I\'ll give you the question and the context and so on. Your goal is to answer my questions, provide explanations for your answers, and re-answer based on context if you are unsure or if your answers conflict with other information I have provided. The format of your answer is as follows: "The answer is [answer], and the reason is [reason]." If you can\'t provide an answer, please respond with "None".',
    'You are a trusted assistant to help me answer the question. Please explain the answer again based on the context I give to you, when there is conflict between the information that you have gathered and the information that provided by context, or you are not sure if the answer is correct. The format of your answer should meet the following requirements: " The answer is [answer], and the reason is [reason]." If you can not answer the question, please give me the reply "None".',
    'You are a trusted assistant to help me answer the question. Please explain the answer again based on the context I give to you, when there is conflict between the information that you have gathered and the information that provided by context, or you are not sure if the answer is correct. The format of your answer should meet the following requirements:"The answer is [answer], and the reason is [reason]." If you can not answer the question, please give me the apply "None".',
]

FS_NOHINT_SUFFIX = [
    ' Here are some examples:' + EX3 + "\nI'd like you to imitate these examples and give me your answer to the following question.",
    ' Allow me to present some examples for better clarity:' + EX3,
    ' Here are some examples:\n"\nExample 1:\n[example1],\nExample 2:\n[example2],\nExample 3:\n[example3]\n"\nYou should read these examples and answer the following question.',
    ' Kindly review the following examples:\n"\n{{Example}}: [example1],\n{{Example}}: [example2],\n{{Example}}: [example3]\n"\nPlease read through these examples and help me answer the following question.',
    ' Now I want you to read some examples and help me answer some questions.' + EX3,
    ' I will also provide you with some examples of questions and answers:\n"\nExample: [example1],\nExample: [example2],\nExample: [example3]\n"',
    ' I will provide you with some examples of questions and answers, here they are:' + EX3,
    ' At the same time, your answer can refer to some examples of questions and answers I give:' + EX3 + '\nFinally, please provide me with the results and explanations of the answer.',
    ' Here are a few examples to illustrate the questions and answers:\n"\n1. [example1]\n2. [example2]\n3. [example3]\n"\nYour objective is to respond to my questions by using the provided examples as references.',
    '\nBelow are some examples for your reference:\n"\n{{Example}}: [example1],\n{{Example}}: [example2],\n{{Example}}: [example3]\n"\nyou are given an extra question.',
    ' Please refer to the examples provided below and answer the additional question given.' + EX3,
    ' Example:' + EX3,
]

FS_HINT_SUFFIX = [
    ' Here are some examples:' + EX3 + "\nNOTE: Some of these examples are possibly wrong, I'd like you to follow these examples and give me your answer which is right.",
    ' Here are some examples to guide you:' + EX3 + '\nPlease keep in mind that some of these examples may contain errors or inaccuracies. I kindly request that you utilize these examples as references. Your expertise and assistance are highly valued. Thank you!',
    ' Here are some examples:' + EX3 + '\nPay attention: NOT all examples are right. You should read these examples, think, and answer the following question.',
    ' Now I want you to read some examples and help me answer some questions.\n"\nExample: [example1],\nExample: [example2],\nExample: [example3]\n"\nAttention: you just need to learn how to answer in format like these examples.',
    ' Here are the examples for your reference:\n"\n{{Example}}: [example1],\n{{Example}}: [example2],\n{{Example}}: [example3]\n"\nPlease focus on understanding the format of these examples and ensure your answers align accordingly. Your thoughtful responses will be greatly appreciated.',
    ' I want you to imitate the reasoning of these sample answers to the current questions I provide:' + EX3 + '\nNote: Some of the reasoning in these examples are wrong, I hope you do not care whether the reasoning is correct when referring to these examples.',
    ' I hope that you will learn the reasoning patterns of these examples before giving your answer and explanation for your reasoning on the current question:\n"\nExample:\n[example1],\n[example2],\n[example3]\n"\nIt is worth noting that the reasoning process of the examples I have given to you is not necessarily accurate, and you cannot learn and reason solely based on the examples I given to you.',
    '\nExample:' + EX3 + '\nOf course, There may exist some errors in the reasoning of these examples, you can not completely base on the examples I given to you, I hope you have your own understanding of the reasoning process, and can provide a more accurate answer to the current question.',
    ' Please use the following sample questions and answers as a reference for the style of reasoning I expect in your responses. Kindly note that while these examples provide a basis for imitation, some of the reasoning within them may be incorrect:\n"\n1. [example1]\n2. [example2]\n3. [example3]\n"\nWhen answering my questions, please try to emulate the reasoning style demonstrated in these examples.',
    ' Please find below some reference examples:\n"\nExample 1: [example1]\nExample 2: [example2]\nExample 3: [example3]\n"\nPlease note that there might be errors in these examples, these given examples are only for the format reference. After reviewing the examples, please answer the following question.',
    ' Review the examples provided below, and then answer the additional question by completing the text. Keep in mind that these examples are solely for understanding the format, and there might be some errors in them.' + EX3,
    " Use the examples below to understand how to arrive at the final answer. Keep in mind that the examples may contain errors, so focus on the process rather than the content's accuracy." + EX3,
]


def rows():
    for i, text in enumerate(ZS_NOHINT, 1):
        yield dict(id=f"zs-nohint-{i:02d}", text=text, hint=False, setting="zero_shot", origin="human_draft")
    for i, text in enumerate(ZS_HINT, 1):
        yield dict(id=f"zs-hint-{i:02d}", text=text, hint=True, setting="zero_shot", origin="human_draft")
    for i, (base, suffix) in enumerate(zip(ZS_NOHINT, FS_NOHINT_SUFFIX), 1):
        yield dict(id=f"fs-nohint-{i:02d}", text=base + suffix, hint=False, setting="few_shot", origin="human_draft")
    for i, (base, suffix) in enumerate(zip(ZS_HINT, FS_HINT_SUFFIX), 1):
        yield dict(id=f"fs-hint-{i:02d}", text=base + suffix, hint=True, setting="few_shot", origin="human_draft")


def main():
    out = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "fixtures", "instruction_pool.jsonl")
    os.makedirs(os.path.dirname(out), exist_ok=True)
    with open(out, "w", encoding="utf-8") as f:
        for row in rows():
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
