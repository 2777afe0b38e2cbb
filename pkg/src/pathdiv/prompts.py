"""Prompt templates for every LLM interaction in the pipeline.

Templates are rendered by literal placeholder substitution (see
``llm.render``), never by str.format, so the doubled-brace output markers
(//boxed{{...}}) reach the model byte-for-byte as written here.
"""

SUMMARIZE = """You are a specialized AI expert in analyzing mathematical solutions. Your task is to first provide a step-by-step analysis of a solution, and then, based on your analysis, generate a final JSON output that is concise, direct, and method-focused.

### REQUIRED OUTPUT STRUCTURE
Your response MUST have two distinct parts in the following order:

Part 1: Analysis & Thinking Process
- Start this section with the heading ### Analysis.
- Briefly explain your reasoning as you deconstruct the provided solution. This is your "scratchpad".

Part 2: Final JSON Output
- After your analysis, provide the final JSON output enclosed in //boxed{{}}.
- This part must contain only the //boxed{{...}} block and nothing else.

### CONTENT RULES FOR THE FINAL JSON
1. Step Count: The JSON must contain strictly 3 to 5 logical steps.
2. Output Style:
   - Use direct, active verb phrases. Start each description with a verb (e.g., "Calculate", "Identify", "Apply").
   - DO NOT use narrative phrasing like "The author identifies..." or "The solution then calculates...".
3. Abstraction Level:
   - Be abstract about numbers and variables, but be specific about the methodology.
   - BAD (Too Vague): "Use a formula to get the result."
   - BAD (Too Concrete): "Calculate 1/3 + 1/6 = 1/2."
   - GOOD (Balanced): "Combine the individual rates to find the total work rate."

### JSON STRUCTURE SPECIFICATION
- The root object must have one key: "logical_steps".
- The value of "logical_steps" must be a list ([]) of step objects.
- Each step object ({{}}) must contain two keys:
  - "step_title": A short title for the step (e.g., "Step 1: Combine Rates"). Use null if not applicable.
  - "step_description": A concise summary of the action, following all rules above.

### EXAMPLE OF THE COMPLETE TWO-PART OUTPUT
Input Solution: "Pipe A fills a tank in 3 hours, so its rate is 1/3 tank/hr. Pipe B fills it in 6 hours, so its rate is 1/6 tank/hr. Together, their rate is 1/3 + 1/6 = 1/2 tank/hr. Therefore, the time to fill the tank together is the reciprocal of the rate, which is 1 / (1/2) = 2 hours."

Your Required Output:
### Analysis
The solution addresses a classic work-rate problem.
1.  First, it calculates the individual rate for each pipe.
2.  Second, it sums these rates to get a combined rate.
3.  Finally, it converts the combined rate back into total time.
The logic is broken down into three clear, abstract steps.

//boxed{{
  "logical_steps": [
    {{
      "step_title": "Step 1: Determine Individual Rates",
      "step_description": "Determine the individual work rate of each component based on the time taken."
    }},
    {{
      "step_title": "Step 2: Combine Rates",
      "step_description": "Combine the individual rates to find the total system work rate."
    }},
    {{
      "step_title": "Step 3: Calculate Total Time",
      "step_description": "Calculate the total time by taking the reciprocal of the combined work rate."
    }}
  ]
}}

### YOUR TASK
Math Problem:
{question_text}

Chain-of-Thought Solution to Analyze:
{answer_cot}
"""

# Shared by the classification and selection prompts below, which spell out
# the identical criteria for what counts as a methodological difference.
_CRITERIA = """Your primary task is to act as a discerning analyst. You must distinguish between minor procedural choices and significant differences in core steps. Assume that most solutions might share a high-level strategy; your goal is to find answers that execute core steps in a meaningfully different way.

Defining Methodological Difference (Your Core Criteria):

What IS NOT a Significant Difference (Methodologically Similar):
- Order of Calculation: Calculating value A then B, versus B then A, before combining them in the same way.
- Algebraic Equivalence: Using the form (a+b)^2 versus a^2 + 2ab + b^2.
- Variable Naming or Notation: Using n vs x.
- Choice of Standard Procedural Equivalents: One summary describes solving a system of equations using substitution, while the other uses elimination. These are considered standard, interchangeable procedures within the same overall algebraic approach.
- Rigorous Proof vs. Heuristic Assumption: If the overall strategy is the same, simply proving a result versus assuming it does not constitute a diverse approach. Both are still following the same high-level logical path.

What IS a Significant Difference (Methodologically Diverse):
- This difference represents a completely distinct, independent, high-level strategic choice that fundamentally alters the entire problem-solving path from beginning to end.
- Example 1 (Different Overall Framework): One solution to a geometry problem uses coordinate geometry, another uses synthetic geometry, and a third uses vector analysis.
- Example 2 (Completely Different Logical Path): To solve a counting problem, one answer uses direct casework, another uses complementary counting, and a third uses a recurrence relation.
- Example 3 (Change in Analytical Tool): A solution to an optimization problem uses calculus, a second uses inequalities (like AM-GM), and a third uses linear programming."""

CLASSIFY_PROBLEM = """You are a master mathematician and an expert in pedagogical analysis. Your task is to classify a problem based on the methodological diversity of its proposed solutions.

Your goal is to perform a binary classification:
- Class 2 (Diverse): If the provided solution summaries showcase more than one distinct core methodology.
- Class 1 (Not Diverse): If all solutions use the same core methodology, or if the differences are only superficial (e.g., a different order of calculation, or using standard procedural equivalents like substitution vs. elimination).

### 1. Your Analysis Framework & Core Criteria

""" + _CRITERIA + """

### 2. Content to Analyze

Problem:
{question}

Proposed Solutions (Summarized by Logical Steps):
{summaries_text}

### 3. Output Requirement

Based on the final criteria review, classify the diversity of the solutions.

Output Requirement:
Immediately after your classification, provide your final answer in a strict JSON format within a special block. The JSON should be a single integer, either 1 or 2. Do not provide any other text.

Example of Final Output Structure for a Diverse problem:
//boxed{{2}}

Example of Final Output Structure for a Not Diverse problem:
//boxed{{1}}

Begin Analysis and Provide Output:
"""

SELECT_PAIR = """You are a master mathematician and an expert in pedagogical analysis. Your task is to analyze multiple proposed solutions for a given problem and select a single pair of answers that represents the maximum possible methodological diversity. If no such pair exists, you must indicate this.

Your goal is to identify one pair of answers that represents a significant difference in a core step or sub-methodology. If all solutions follow a fundamentally similar strategy, your answer will be to select "No".

### 1. Your Analysis Framework & Core Criteria

""" + _CRITERIA + """

### 2. Content to Analyze

Problem:
{question}

Proposed Solutions (Summarized by Logical Steps):
{summaries_text}

### 3. Final Instructions & Output Requirement

Your Task:
Based on the final criteria review, analyze the solutions and make one of two possible determinations:
1. Identify the single pair of answers with the maximum methodological diversity.
2. Conclude that no pair meets the criteria for significant diversity, meaning all solutions follow a fundamentally similar approach.

Step 1: Brief Comparative Analysis
- If you find a diverse pair: Write a single, brief paragraph. Do not summarize each solution individually. Instead, group the solutions by common methodology and justify your selection of the most diverse pair. For example: "Solution A uses direct casework, while Solution B uses complementary counting. This represents the most significant methodological difference."
- If you do NOT find a diverse pair: Write a single, brief paragraph explaining why. State that all solutions follow a similar core strategy and briefly describe that common approach. For example: "All solutions utilize a system of linear equations to solve for the variables. While they use different methods like substitution or elimination, this does not represent a significant strategic divergence. Therefore, no pair is methodologically diverse."

Step 2: Final JSON Output
Immediately after your brief analysis paragraph, provide your final answer in a strict JSON format within a special block.
- If a diverse pair is found: The JSON should be a list containing the single selected answer ID pair.
- If no diverse pair is found: The JSON should contain the string "No" within the list structure to maintain format consistency.

Example of Final Output Structure (Diverse Pair):
[Your brief analysis justifying the choice...]
//boxed_json{{[[id_A, id_B]]}}

Example of Final Output Structure (No Diverse Pair):
[Your brief analysis explaining the lack of diversity...]
//boxed_json{{[["No"]]}}

Begin Analysis and Provide Output:
"""

JUDGE_PAIR = """You are an expert Answer Analysis Assistant, specializing in understanding and comparing the logic and methodology behind problem-solving. Your task is to receive a question, two full answers with their summaries, and rate them strictly based on the similarity of their methodology.

Note: Based on your prior analysis, you should assume that all proposed solutions for this problem follow a similar high-level strategy. Your task is to find and rate the methodological diversity within this shared high-level strategy.

### Rating Criteria

Your task is to determine if the two answers are Methodologically Similar or Methodologically Diverse based on the criteria below, and assign a corresponding rating.

- Rating 1 (Methodologically Similar): The two answers are considered similar if the differences are superficial. The following are NOT considered significant methodological differences:
  - Order of Calculation: Calculating value A then B, versus B then A, before combining them in the same way.
  - Algebraic Equivalence: Using the form (a+b)^2 versus a^2 + 2ab + b^2.
  - Variable Naming or Notation: Using n vs x.
  - Choice of Standard Procedural Equivalents: One summary describes solving a system of equations using substitution, while the other uses elimination. These are considered standard, interchangeable procedures within the same overall algebraic approach.
  - Rigorous Proof vs. Heuristic Assumption: If the overall strategy is the same, simply proving a result versus assuming it does not constitute a diverse approach. Both are still following the same high-level logical path.

- Rating 2 (Methodologically Diverse): The two answers are considered diverse if the difference represents a completely distinct, independent, high-level strategic choice that fundamentally alters the entire problem-solving path from beginning to end.
  - Example 1 (Different Overall Framework): One solution to a geometry problem uses coordinate geometry, another uses synthetic geometry, and a third uses vector analysis.
  - Example 2 (Completely Different Logical Path): To solve a counting problem, one answer uses direct casework, another uses complementary counting, and a third uses a recurrence relation.
  - Example 3 (Change in Analytical Tool): A solution to an optimization problem uses calculus, a second uses inequalities (like AM-GM), and a third uses linear programming.

### Output Requirement

First, provide a detailed analysis explaining the methodological similarities and differences based on the criteria above. After your analysis is complete, provide the final rating on a new line in the format //boxed{{rating_number}}. DO NOT ONLY GIVE OUT YOUR RATE!

Begin Analysis:

[Question]:
{question}

[Answer A]:
{answer_a}

[Answer A summary]:
{summary_a}

[Answer B]:
{answer_b}

[Answer B summary]:
{summary_b}
"""

SELECT_SET = """You are a master mathematician and an expert in pedagogical analysis. Your task is to analyze multiple proposed solutions for a given problem and select a set of {num_to_select} answers that, as a set, represents the maximum possible methodological diversity.

Your goal is to identify a single set of {num_to_select} answers where each chosen answer has a significant methodological difference from every other answer in the set. Think of it as finding a set of three solutions that are all mutually distinct in their core approach.

### 1. Your Analysis Framework & Core Criteria

""" + _CRITERIA + """

### 2. Content to Analyze

Problem:
{question}

Proposed Solutions (Summarized by Logical Steps):
{summaries_text}

### 3. Final Instructions & Output Requirement

Your Task: Based on the final criteria review, analyze the solutions.

Step 1: Brief Comparative Analysis
First, write a single, brief paragraph for your analysis. Do not summarize each solution individually. Instead, group the solutions by common methodology and justify your selection of the set of {num_to_select} most diverse answers. For example, Solutions A and C use direct casework, while Solution B uses complementary counting, and Solution D uses a geometric approach. The most diverse set is [A, B, D] as it captures these three distinct methods.

Step 2: Final JSON Output
Immediately after your brief analysis paragraph, provide your final answer in a strict JSON format within a special block. The JSON should be a list containing the {num_to_select} selected answer IDs.

Example of Final Output Structure:
[Your brief analysis...]
//boxed_json{{[id_A, id_B, id_C]}}

Begin Analysis and Provide Output:
"""

# The completeness screen needs only a verdict on the ending of a solution.
# This instruction is authored for this toolkit; it demands the same boxed
# output convention as the other prompts.
JUDGE_COMPLETENESS = """You are verifying whether a candidate solution reaches a definite conclusion.

Below is the final portion of a solution to a math problem. Decide whether the solution concludes properly by presenting a clear and final answer (for example, a boxed result or an explicit closing statement of the answer). A solution that trails off mid-derivation, ends on an unresolved expression, or never states its final answer is incomplete.

Give a one-sentence justification, then on a new line provide your verdict in the format //boxed{{YES}} if the solution is complete, or //boxed{{NO}} if it is not.

Solution ending:
{tail_text}
"""
